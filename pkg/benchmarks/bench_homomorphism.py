"""Compare the numba and pure-Python homomorphism kernels.

Run with ``python benchmarks/bench_homomorphism.py [--instances N] [--seed S]``.
Instances are random binary-relation atom sets mapped into a denser target;
about half of them have no homomorphism, which forces full backtracking.
"""

import argparse
import random
import time

from kbound import _accel
from kbound.homo import _encode
from kbound.kernel import Atom, Term


def instance(rng: random.Random, n_src: int, n_tgt: int):
    src_terms = [Term.variable(f"V{i}") for i in range(max(2, n_src // 2))]
    tgt_terms = [Term.constant(f"c{i}") for i in range(max(2, n_tgt // 3))]

    def atoms(terms, n):
        return sorted({Atom(rng.choice("pq"), [rng.choice(terms), rng.choice(terms)]) for _ in range(n)})

    return atoms(src_terms, n_src), atoms(tgt_terms, n_tgt)


def time_backend(encoded, backend: str) -> tuple[float, list[bool]]:
    t = time.perf_counter()
    out = [_accel.hom_exists(*enc, backend=backend) for enc in encoded]
    return time.perf_counter() - t, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if _accel.BACKEND != "numba":
        raise SystemExit("numba backend unavailable (is KBOUND_NO_NUMBA set?)")
    _accel.warm_up()

    print(f"{'source':>6} {'target':>6} {'python s':>9} {'numba s':>9} {'speedup':>8} {'found':>6}")
    for n_src, n_tgt in ((6, 12), (10, 20), (14, 30), (20, 40)):
        rng = random.Random(args.seed)
        encoded = []
        for _ in range(args.instances):
            enc = _encode(*instance(rng, n_src, n_tgt), frozen=set())
            if enc is not None:
                encoded.append(enc)
        py, py_out = time_backend(encoded, "python")
        nb, nb_out = time_backend(encoded, "numba")
        assert py_out == nb_out, "backends disagree"
        print(f"{n_src:>6} {n_tgt:>6} {py:>9.3f} {nb:>9.3f} {py / nb:>7.1f}x {sum(nb_out):>6}")


if __name__ == "__main__":
    main()
