# comment line
values = [1, 2, 3]  # inline comment
squares = {v: v ** 2 for v in values}
