"""Arbitrary-precision reference values frozen into the Rust test suite.

Run with `python3 reference_values.py`; every number printed here appears
verbatim in a test. Requires mpmath.
"""
from mpmath import mp, mpf, gamma, besselk, besselj, pi, sqrt, quad, sin, cos, findroot

mp.dps = 40


def c2(d, a):
    return gamma((d - a) / 2) / (2**a * pi ** (mpf(d) / 2) * gamma(a / 2))


def spectral_density(d, a, lam):
    nu = (d - a) / 2
    return lam ** ((a - d) / 2) * besselk(nu, lam) / (pi ** (mpf(d) / 2) * 2 ** ((a - d) / 2) * gamma(a / 2))


def slowly_varying(d, a, x):
    nu = (d - a) / 2
    return 2 ** ((d + a) / 2) / gamma(nu) * x ** (-nu) * besselk(nu, 1 / x)


third = mpf(1) / 3
two_thirds = mpf(2) / 3
print("gamma(1/3)         =", gamma(third))
print("gamma(7/6)         =", gamma(mpf(7) / 6))
print("gamma(49.5)        =", gamma(mpf(99) / 2))
print("gamma(0.01)        =", gamma(mpf(1) / 100))
print("gamma(7.3)         =", gamma(mpf(73) / 10))
print("K_{7/6}(1/4000)    =", besselk(mpf(7) / 6, mpf(1) / 4000))
print("K_{7/6}(1)         =", besselk(mpf(7) / 6, 1))
print("K_{7/6}(2)         =", besselk(mpf(7) / 6, 2))
print("K_0(1e-5)          =", besselk(0, mpf("1e-5")))
print("K_{2.3}(0.7)       =", besselk(mpf("2.3"), mpf("0.7")))
print("K_{2.3}(35)        =", besselk(mpf("2.3"), 35))
print("K_{10}(0.5)        =", besselk(10, mpf("0.5")))
print("K_{10}(50)         =", besselk(10, 50))
print("K_{0.1}(3.7)       =", besselk(mpf("0.1"), mpf("3.7")))
print("J_0(1)             =", besselj(0, 1))
print("J_{1.5}(7.2)       =", besselj(mpf("1.5"), mpf("7.2")))
print("J_{2.7}(30)        =", besselj(mpf("2.7"), 30))
print("J_{0.5}(400)       =", besselj(mpf("0.5"), 400))
print("J_{7.25}(3)        =", besselj(mpf("7.25"), 3))
print("J_0 first zero     =", findroot(lambda z: besselj(0, z), 2.4))
print("c2(3,2/3)          =", c2(3, two_thirds))
print("f_c(3,2/3,1)       =", spectral_density(3, two_thirds, 1))
print("L_c(3,2/3,1)       =", slowly_varying(3, two_thirds, 1))
print("L_c(3,2/3,1e6)     =", slowly_varying(3, two_thirds, mpf(10) ** 6))
w = lambda t, p: (mpf("1.2") + mpf("0.2") * sin(5 * t) * sin(5 * p)) ** 2 * sin(t)
print("int h_sp^s^2 dS    =", quad(w, [0, pi / 5, 2 * pi / 5, 3 * pi / 5, 4 * pi / 5, pi], [0, pi / 2, pi, 3 * pi / 2, 2 * pi]))
print("  closed form      =", mpf("1.44") * 4 * pi + mpf("0.04") * pi * mpf(100) / 99)
