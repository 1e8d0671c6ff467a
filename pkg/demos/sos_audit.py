"""Check every sum-of-squares decomposition and print the audit report.

Run: python demos/sos_audit.py
"""

from steercert import sos

text, checks = sos.verify_report(draws=50, seed=1)
print(text)
print(f"{sum(c.passed for c in checks)} of {len(checks)} decompositions close")
