#!/usr/bin/env python3
"""Writes the shipped problem files under data/ (fixed seed, reproducible)."""

import argparse
import pathlib

import numpy as np

GOLDEN_TURNS = "0.61803398874989484820458683436563811772"
SEED = 20240611


def run_block(order=8, vmax=8, hband=8):
    return (
        "[run]\n"
        f"vmax {vmax}\nhband {hband}\nepsilon 0.2\nradius 0.5\norder {order}\n"
        "pmax 20\nqmax 20\ncompat_tol 1e-10\nresidual_tol 1e-9\nprecision double\n"
    )


def coefficient(rng, bound=1e-3):
    z = bound * rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform(0, 1))
    return float(z.real), float(z.imag)


def elliptic_golden(rng):
    lines = [
        "# n = d = 1, e_2 = 0.3 + 1.1i, mu = exp(2 pi i (sqrt(5) - 1) / 2)",
        "[lattice]",
        "n 1",
        "d 1",
        "period 1 0.3 1.1",
        "",
        "[multipliers]",
        "mode unitary",
        f"mu 1 1 turns {GOLDEN_TURNS}",
        "",
        "[perturbation]",
    ]
    for q in range(2, 9):
        for p in (-1, 0, 1):
            re, im = coefficient(rng)
            lines.append(f"term 1 v 1 {p} {q} {re!r} {im!r}")
        for p in (0, 1, 2):
            re, im = coefficient(rng)
            lines.append(f"term 1 h 1 {p} {q} {re!r} {im!r}")
    return "\n".join(lines) + "\n\n" + run_block()


def trivial_bundle():
    return (
        "# mu = 1: every P = 0 divisor vanishes\n"
        "[lattice]\nn 1\nd 1\nperiod 1 0.3 1.1\n\n"
        "[multipliers]\nmode unitary\nmu 1 1 turns 0\n\n"
        "[perturbation]\nterm 1 v 1 0 2 0.001 0\n\n" + run_block()
    )


def minimal():
    return (
        "[lattice]\nn 1\nd 1\nperiod 1 0.3 1.1\n\n"
        f"[multipliers]\nmode unitary\nmu 1 1 turns {GOLDEN_TURNS}\n\n"
        "[perturbation]\n\n" + run_block(order=4, vmax=4, hband=4)
    )


def square_lattice():
    return (
        "# n = 2, d = 1, periods i e_1 and i e_2\n"
        "[lattice]\nn 2\nd 1\nperiod 1 0 1 0 0\nperiod 2 0 0 0 1\n\n"
        "[multipliers]\nmode unitary\n"
        f"mu 1 1 turns {GOLDEN_TURNS}\nmu 2 1 turns 0.41421356237309504880168872420969807857\n\n"
        "[perturbation]\n\n" + run_block(order=4, vmax=4, hband=4)
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    files = {
        "elliptic_golden.problem": elliptic_golden(rng),
        "trivial_bundle.problem": trivial_bundle(),
        "minimal.problem": minimal(),
        "square_lattice.problem": square_lattice(),
    }
    for name, text in files.items():
        (out / name).write_text(text)
        print(out / name)


if __name__ == "__main__":
    main()
