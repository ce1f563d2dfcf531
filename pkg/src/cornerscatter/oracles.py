"""Partial-wave reference solutions for a constant-index disk, built on scipy Bessel routines."""

import numpy as np
from scipy.special import h1vp, hankel1, jv, jvp


def disk_scattered_field(k, m0, a, X, Y, direction=0.0, orders=40):
    """Partial-wave scattered field of a plane wave hitting a constant-index disk.

    Inside: sum A_l J_l(k n r) e^{il(phi-d)} minus the incident wave.
    Outside: sum B_l H_l(k r) e^{il(phi-d)}.
    """
    n = np.sqrt(1 - m0)
    r = np.hypot(X, Y)
    ph = np.arctan2(Y, X)
    out = np.zeros(np.shape(X), dtype=complex)
    for l in range(-orders, orders + 1):
        al = abs(l)
        M = np.array([[jv(al, k * n * a), -hankel1(al, k * a)],
                      [n * jvp(al, k * n * a), -h1vp(al, k * a)]])
        rhs = 1j**al * np.array([jv(al, k * a), jvp(al, k * a)])
        A, B = np.linalg.solve(M, rhs)
        e = np.exp(1j * l * (ph - direction))
        out += np.where(r < a, A * jv(al, k * n * r) - 1j**al * jv(al, k * r),
                        B * hankel1(al, k * r)) * e
    return out


def disk_far_field(k, m0, a, theta, direction=0.0, orders=40):
    """Far-field pattern alpha(theta) in the exp(ikr)/sqrt(ikr) convention."""
    n = np.sqrt(1 - m0)
    out = np.zeros(np.shape(theta), dtype=complex)
    for l in range(-orders, orders + 1):
        al = abs(l)
        M = np.array([[jv(al, k * n * a), -hankel1(al, k * a)],
                      [n * jvp(al, k * n * a), -h1vp(al, k * a)]])
        rhs = 1j**al * np.array([jv(al, k * a), jvp(al, k * a)])
        _, B = np.linalg.solve(M, rhs)
        # H_l(kr) ~ sqrt(2/(pi k r)) exp(i(kr - l pi/2 - pi/4)) and 1/sqrt(ikr) = exp(-i pi/4)/sqrt(kr)
        out += B * np.sqrt(2 / np.pi) * (-1j) ** al * np.exp(1j * l * (theta - direction))
    return out
