#!/usr/bin/env python3
"""Regenerates data/quad_oracle.json: reference integrals for the quadrature benchmarks.

Each value is computed by adaptive Gauss-Kronrod (scipy.integrate.quad, split at every
discontinuity) and cross-checked against a 30-digit mpmath tanh-sinh evaluation and,
where one exists, a closed form.
"""
import json
import math
import pathlib

import mpmath
from scipy import integrate

OMEGA = 100.0
P = 16


def f3_pieces():
    """(lo, hi, a_k) for the nonzero half of each of the p cells of [0, 10]."""
    return [(10.0 * (k - 1) / P, 10.0 * (k - 0.5) / P, 0.3 + 0.05 * (k - 1)) for k in range(1, P + 1)]


def f3_scipy():
    total = 0.0
    for lo, hi, a in f3_pieces():
        val, _ = integrate.quad(lambda x: x + a * math.sin(OMEGA * x), lo, hi, limit=500,
                                epsabs=1e-13, epsrel=1e-12)
        total += val
    return total


def f3_mpmath():
    mpmath.mp.dps = 30
    total = mpmath.mpf(0)
    for lo, hi, a in f3_pieces():
        total += mpmath.quad(lambda x: x + a * mpmath.sin(OMEGA * x), mpmath.linspace(lo, hi, 40))
    return total


def f3_closed():
    total = 0.0
    for lo, hi, a in f3_pieces():
        total += 0.5 * (hi * hi - lo * lo) + a * (math.cos(OMEGA * lo) - math.cos(OMEGA * hi)) / OMEGA
    return total


def f4(x):
    return (x + 1.0) * math.sin(OMEGA * (x + 1.0) ** 2)


def f4_scipy():
    val, _ = integrate.quad(f4, 0.0, 1.0, limit=2000, epsabs=1e-13, epsrel=1e-12)
    return val


def f4_mpmath():
    mpmath.mp.dps = 30
    return mpmath.quad(lambda x: (x + 1) * mpmath.sin(OMEGA * (x + 1) ** 2), mpmath.linspace(0, 1, 200))


def f4_closed():
    # substitute u = (x + 1)^2
    return (math.cos(OMEGA) - math.cos(4.0 * OMEGA)) / (2.0 * OMEGA)


def main():
    rows = {}
    for name, interval, gk, mp, closed in [
        ("f3", [0.0, 10.0], f3_scipy(), f3_mpmath(), f3_closed()),
        ("f4", [0.0, 1.0], f4_scipy(), f4_mpmath(), f4_closed()),
    ]:
        spread = max(abs(gk - float(mp)), abs(gk - closed))
        assert spread < 1e-10, (name, gk, mp, closed)
        rows[name] = {"interval": interval, "value": gk, "mpmath": float(mp), "closed_form": closed,
                      "spread": spread}
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "quad_oracle.json"
    out.write_text(json.dumps(rows, indent=2) + "\n")
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
