"""High-precision reference values for the assay formulas.

Run with `python3 assay_oracle.py`; the printed numbers are frozen in
tests/acceptance.rs and tests/assay.rs.
"""
from mpmath import mp, mpf, log10

mp.dps = 50


def retention(c0, cd, ca, vd, va):
    return 1 - cd / c0 - (va * ca) / (vd * c0)


def permeability(c0, cd, mr, area, t, rv):
    arg = -rv + ((1 + rv) / (1 - mr)) * (cd / c0)
    return (-mpf("2.303") / (area * t)) * (1 / (1 + rv)) * log10(arg)


vd, va, area, t = mpf("0.15"), mpf("0.3"), mpf("0.3"), mpf(14400)
rv = vd / va

mr = retention(mpf("1e-7"), mpf("6e-8"), mpf("1e-8"), vd, va)
print("retention_example", mp.nstr(mr, 20))

pe = permeability(mpf(1), mpf("0.6"), mpf(0), area, t, rv)
print("permeability_example", mp.nstr(pe, 20))
print("log_pe_example", mp.nstr(log10(pe), 20))

pe_well = permeability(mpf("1e-7"), mpf("6e-8"), mr, area, t, rv)
print("well_permeability", mp.nstr(pe_well, 20))
print("well_log_pe", mp.nstr(log10(pe_well), 20))
