doc = """A triple quoted
string spanning lines
with 'quotes' inside."""
