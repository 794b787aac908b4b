"""Compare the numba and numpy implementations of the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Forces ``SPARSENAS_BACKEND=numba`` so both kernel sets are importable side by
side: the ``*_nb`` functions are compiled, the ``*_np`` ones are plain numpy,
and coordinate descent is compared against its own uncompiled body.
Shapes match a desk-scale training batch (n=200 codes x 128 samples).
"""
import argparse
import os
import timeit

os.environ["SPARSENAS_BACKEND"] = "numba"

import numpy as np  # noqa: E402

from sparsenas import _kernels  # noqa: E402
from sparsenas import activations as acts  # noqa: E402
from sparsenas import solvers  # noqa: E402
from sparsenas.datagen import make_sparse_dataset  # noqa: E402
from sparsenas.nas import EIGHT_OPS, FOUR_OPS  # noqa: E402


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_mixture(ops, repeat):
    rng = np.random.default_rng(0)
    U = rng.standard_normal((200, 128)) * 0.1
    G = rng.standard_normal((200, 128))
    codes, params = acts.kernel_args([acts.from_name(o, 5e-7) for o in ops])
    p = np.full(len(ops), 1.0 / len(ops))
    rows = []
    for label, nb, np_ in (
        ("mix_forward", lambda: _kernels._mix_forward_nb(U, codes, params, p),
         lambda: _kernels._mix_forward_np(U, codes, params, p)),
        ("mix_backward", lambda: _kernels._mix_backward_nb(U, G, codes, params, p),
         lambda: _kernels._mix_backward_np(U, G, codes, params, p)),
    ):
        nb()  # compile outside the timed region
        rows.append((f"{label} J={len(ops)}", best_of(nb, repeat, 200), best_of(np_, repeat, 200)))
    return rows


def bench_cd(repeat):
    ds = make_sparse_dataset(0, count=4)
    W = np.ascontiguousarray(ds.dictionary.W)
    x = ds.X[:, 0]
    col_sq = np.einsum("ij,ij->j", W, W)
    lam = 0.02

    def run(fn):
        return lambda: fn(W, x, col_sq, lam, 1e-10, 200, np.zeros(W.shape[1]), x.copy())

    jit, py = run(solvers._cd_sweeps), run(solvers._cd_sweeps.py_func)
    jit()
    return [("lasso_cd 200 sweeps", best_of(jit, repeat, 5), best_of(py, repeat, 1))]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rows = bench_mixture(FOUR_OPS, args.repeat) + bench_mixture(EIGHT_OPS, args.repeat) + bench_cd(args.repeat)
    print(f"{'kernel':<24}{'numba':>12}{'numpy':>12}{'numpy/numba':>14}")
    for name, t_nb, t_np in rows:
        print(f"{name:<24}{t_nb * 1e3:>10.3f}ms{t_np * 1e3:>10.3f}ms{t_np / t_nb:>14.2f}")
    print("auto backend: numba for lasso_cd, numpy for the mixtures")


if __name__ == "__main__":
    main()
