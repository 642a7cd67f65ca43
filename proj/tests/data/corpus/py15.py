lam = lambda x, *args, **kw: (x, args, kw)
result = lam(1, 2, 3, key="v")
