"""Reference numeric executor and oracle.

Naive dense implementations of every catalog kernel, each with an honest
flop counter (one multiply or add counts 1; a fused multiply-add counts 2).
The oracle evaluates an expression tree literally, with every inverse
computed by Gaussian elimination with partial pivoting, so generated
algorithms are checked against an independent path.  Factorizations are
written out (column Cholesky, Householder QR, cyclic Jacobi) rather than
delegated, so the two routes share nothing but numpy array arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .expr import (
    Expression,
    Identity,
    Inv,
    Negate,
    Operand,
    Plus,
    Scalar,
    Times,
    Trans,
    Equation,
)
from .kernels import Arg, KernelCall
from .properties import Property, PropertyContext


class ExecutionError(Exception):
    """A kernel precondition failed while running an algorithm."""


class Flops:
    """Cumulative flop counters per kernel name."""

    def __init__(self):
        self.counts: dict[str, int] = {}

    def add(self, kernel: str, n: int) -> None:
        self.counts[kernel] = self.counts.get(kernel, 0) + int(n)

    def total(self, *, exclude: tuple[str, ...] = ()) -> int:
        return sum(v for k, v in self.counts.items() if k not in exclude)

    def get(self, kernel: str) -> int:
        return self.counts.get(kernel, 0)

    def report(self) -> str:
        lines = [f"{k}: {v}" for k, v in sorted(self.counts.items())]
        return "\n".join(lines)


# --- kernels ------------------------------------------------------------------


def cholesky(a: np.ndarray, fl: Flops) -> np.ndarray:
    n = a.shape[0]
    if a.shape[1] != n:
        raise ExecutionError("cholesky needs a square matrix")
    L = np.zeros_like(a, dtype=float)
    for j in range(n):
        s = a[j, j] - L[j, :j] @ L[j, :j]
        fl.add("potrf", 2 * j + 1)
        if s <= 0.0:
            raise ExecutionError(f"matrix not positive definite (pivot {j})")
        L[j, j] = math.sqrt(s)
        if j + 1 < n:
            rest = a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]
            L[j + 1 :, j] = rest / L[j, j]
            fl.add("potrf", (n - j - 1) * (2 * j + 1))
    return L


def householder_qr(a: np.ndarray, fl: Flops) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR by Householder reflections: returns (Q n-by-p, R p-by-p)."""
    n, p = a.shape
    if n < p:
        raise ExecutionError("qr needs rows >= cols")
    R = a.astype(float).copy()
    vs: list[np.ndarray] = []
    for k in range(p):
        x = R[k:, k]
        norm_x = math.sqrt(float(x @ x))
        fl.add("geqrf", 2 * len(x))
        if norm_x == 0.0:
            raise ExecutionError(f"rank deficiency in qr at column {k}")
        v = x.copy()
        v[0] += math.copysign(norm_x, x[0])
        vnorm2 = float(v @ v)
        fl.add("geqrf", 2 * len(v) + 2)
        if vnorm2 == 0.0:
            raise ExecutionError(f"rank deficiency in qr at column {k}")
        w = (2.0 / vnorm2) * (v @ R[k:, k:])
        R[k:, k:] -= np.outer(v, w)
        m = len(v)
        cols = p - k
        fl.add("geqrf", 4 * m * cols + cols)
        vs.append(v)
    # form the thin Q explicitly; counted separately (the factorization
    # model covers only the reduction, as in the library routine)
    Q = np.zeros((n, p))
    for i in range(p):
        Q[i, i] = 1.0
    for k in reversed(range(p)):
        v = vs[k]
        w = (2.0 / float(v @ v)) * (v @ Q[k:, :])
        Q[k:, :] -= np.outer(v, w)
        fl.add("orgqr", 4 * len(v) * p + p + 2 * len(v))
    return Q, np.triu(R[:p, :])


def jacobi_eig(a: np.ndarray, fl: Flops, tol: float = 1e-13, max_sweeps: int = 50):
    """Cyclic Jacobi for symmetric matrices: returns (Z, W) with Z W Z' = A."""
    n = a.shape[0]
    A = a.astype(float).copy()
    Z = np.eye(n)
    norm = np.linalg.norm(A)
    if norm == 0.0:
        return Z, A
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, float(np.sum(A * A) - np.sum(np.diag(A) ** 2))))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                fl.add("syev", 12)
                rot = np.array([[c, -s], [s, c]])
                A[[p, q], :] = rot.T @ A[[p, q], :]
                A[:, [p, q]] = A[:, [p, q]] @ rot
                Z[:, [p, q]] = Z[:, [p, q]] @ rot
                fl.add("syev", 18 * n)
    W = np.diag(np.diag(A)).copy()
    return Z, W


def svd_via_gram(a: np.ndarray, fl: Flops):
    """SVD at desk scale: eigendecomposition of A'A (or AA' when wide)."""
    n, p = a.shape
    if n < p:
        v, s, u = svd_via_gram(a.T, fl)
        return u, s, v
    g = a.T @ a
    fl.add("svd", p * p * (2 * n - 1))
    V, W = jacobi_eig(g, _RedirectFlops(fl, "svd"))
    lam = np.diag(W).copy()
    order = np.argsort(-lam)
    lam = lam[order]
    V = V[:, order]
    lam = np.maximum(lam, 0.0)
    sigma = np.sqrt(lam)
    if np.any(sigma <= 0.0):
        raise ExecutionError("rank-deficient input to svd")
    U = (a @ V) / sigma
    fl.add("svd", n * p * (2 * p - 1) + n * p)
    return U, np.diag(sigma), V


class _RedirectFlops:
    def __init__(self, inner: Flops, name: str):
        self.inner = inner
        self.name = name

    def add(self, _kernel: str, n: int) -> None:
        self.inner.add(self.name, n)


def solve_triangular(
    t: np.ndarray,
    b: np.ndarray,
    fl: Flops,
    *,
    lower: bool,
    trans: bool = False,
    counter: str = "trsv",
) -> np.ndarray:
    """Forward/back substitution; `trans` solves T' x = b."""
    n = t.shape[0]
    if trans:
        lower = not lower
        t = t.T
    x = b.astype(float).copy()
    nrhs = x.shape[1]
    rows = range(n) if lower else range(n - 1, -1, -1)
    for i in rows:
        if t[i, i] == 0.0:
            raise ExecutionError(f"singular triangular matrix (row {i})")
        if lower:
            if i > 0:
                x[i, :] -= t[i, :i] @ x[:i, :]
                fl.add(counter, 2 * i * nrhs)
        else:
            if i < n - 1:
                x[i, :] -= t[i, i + 1 :] @ x[i + 1 :, :]
                fl.add(counter, 2 * (n - 1 - i) * nrhs)
        x[i, :] /= t[i, i]
        fl.add(counter, nrhs)
    return x


def gemm(a: np.ndarray, b: np.ndarray, fl: Flops) -> np.ndarray:
    m, k = a.shape
    k2, n = b.shape
    if k != k2:
        raise ExecutionError(f"gemm shape mismatch {a.shape} x {b.shape}")
    fl.add("gemm", m * n * (2 * k - 1))
    return a @ b


def gemv(a: np.ndarray, x: np.ndarray, fl: Flops) -> np.ndarray:
    m, n = a.shape
    if x.shape != (n, 1):
        raise ExecutionError(f"gemv shape mismatch {a.shape} x {x.shape}")
    fl.add("gemv", m * (2 * n - 1))
    return a @ x


def syrk(a: np.ndarray, fl: Flops, *, gram: bool) -> np.ndarray:
    """A'A (gram) or AA' (outer), computed on the symmetric half."""
    n, p = a.shape
    if gram:
        k, out_dim = n, p
        base = a.T
    else:
        k, out_dim = p, n
        base = a
    out = np.empty((out_dim, out_dim))
    for i in range(out_dim):
        row = base[i : i + 1, :] @ base[i:, :].T
        out[i, i:] = row
        out[i:, i] = row
        fl.add("syrk", (out_dim - i) * (2 * k - 1))
    return out


def scal_add(alpha: float, a: np.ndarray, beta: float, b: np.ndarray, fl: Flops) -> np.ndarray:
    if a.shape != b.shape:
        raise ExecutionError(f"scal-add shape mismatch {a.shape} vs {b.shape}")
    out = alpha * a + beta * b
    fl.add("scal-add", 3 * a.size)
    return out


def scal(a: np.ndarray, fl: Flops, *, diag: np.ndarray | None = None,
         factor: float | None = None, side: str = "right", invert: bool = False) -> np.ndarray:
    if factor is not None:
        fl.add("scal", a.size)
        return factor * a
    d = np.diag(diag).copy()
    if invert:
        if np.any(d == 0.0):
            raise ExecutionError("singular diagonal in scal")
        d = 1.0 / d
        fl.add("scal", len(d))
    fl.add("scal", a.size)
    if side == "right":
        return a * d[np.newaxis, :]
    return a * d[:, np.newaxis]


def dot(x: np.ndarray, y: np.ndarray, fl: Flops) -> np.ndarray:
    n = x.shape[0]
    fl.add("dot", 2 * n - 1)
    return x.T @ y


def axpy(alpha: float, x: np.ndarray, y: np.ndarray, fl: Flops) -> np.ndarray:
    fl.add("axpy", 2 * x.size)
    return alpha * x + y


def gauss_inverse(a: np.ndarray, fl: Flops | None = None) -> np.ndarray:
    """Inverse by Gaussian elimination with partial pivoting."""
    n = a.shape[0]
    if a.shape[1] != n:
        raise ExecutionError("inverse of a non-square matrix")
    aug = np.hstack([a.astype(float).copy(), np.eye(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot, col]) < 1e-300:
            raise ExecutionError("numerically singular matrix in oracle inverse")
        if pivot != col:
            aug[[col, pivot], :] = aug[[pivot, col], :]
        aug[col, :] /= aug[col, col]
        for row in range(n):
            if row != col and aug[row, col] != 0.0:
                aug[row, :] -= aug[row, col] * aug[col, :]
    if fl is not None:
        fl.add("oracle-inv", 2 * n**3)
    return aug[:, n:]


# --- oracle ----------------------------------------------------------------------


def _is_scalar_value(v: np.ndarray) -> bool:
    return v.shape == (1, 1)


def evaluate(e: Expression, values: dict[str, np.ndarray], shape_hint: tuple[int, int] | None = None) -> np.ndarray:
    """Literal evaluation of an expression tree (the oracle path)."""
    if isinstance(e, Operand):
        try:
            return values[e.name]
        except KeyError:
            raise ExecutionError(f"operand {e.name!r} is not bound") from None
    if isinstance(e, Scalar):
        return np.array([[float(e.value)]])
    if isinstance(e, Identity):
        if shape_hint is None:
            raise ExecutionError("identity with no dimension context")
        return np.eye(shape_hint[0])
    if isinstance(e, Trans):
        return evaluate(e.child, values, None if shape_hint is None else (shape_hint[1], shape_hint[0])).T
    if isinstance(e, Negate):
        return -evaluate(e.child, values, shape_hint)
    if isinstance(e, Inv):
        v = evaluate(e.child, values, shape_hint)
        if _is_scalar_value(v):
            if v[0, 0] == 0.0:
                raise ExecutionError("scalar division by zero")
            return np.array([[1.0 / v[0, 0]]])
        return gauss_inverse(v)
    if isinstance(e, Plus):
        shape = shape_hint
        vals = []
        pending_identities = 0
        for t in e.terms:
            if isinstance(t, Identity):
                pending_identities += 1
                vals.append(None)
                continue
            v = evaluate(t, values, shape)
            if not _is_scalar_value(v):
                shape = v.shape
            vals.append(v)
        out = None
        for t, v in zip(e.terms, vals):
            if v is None:
                if shape is None:
                    raise ExecutionError("identity with no dimension context in sum")
                v = np.eye(shape[0])
            if out is None:
                out = v.astype(float).copy()
            else:
                if _is_scalar_value(out) and not _is_scalar_value(v):
                    out = out[0, 0] + v
                elif _is_scalar_value(v) and not _is_scalar_value(out):
                    out = out + v[0, 0]
                else:
                    out = out + v
        return out
    if isinstance(e, Times):
        factors = list(e.factors)
        values_list: list[np.ndarray | None] = [
            None if isinstance(f, Identity) else evaluate(f, values) for f in factors
        ]
        # resolve identity dimensions from their product neighbors
        sizes: list[int | None] = [None] * (len(factors) + 1)
        for i, v in enumerate(values_list):
            if v is not None and not _is_scalar_value(v):
                sizes[i] = v.shape[0]
                sizes[i + 1] = v.shape[1]
        for i, v in enumerate(values_list):
            if v is None:
                known = sizes[i] if sizes[i] is not None else sizes[i + 1]
                if known is None and shape_hint is not None:
                    known = shape_hint[0]
                if known is None:
                    raise ExecutionError("identity with no dimension context in product")
                sizes[i] = sizes[i + 1] = known
        acc: np.ndarray | None = None
        scalar_acc = 1.0
        for i, v in enumerate(values_list):
            if v is None:
                v = np.eye(sizes[i])
            if _is_scalar_value(v):
                scalar_acc *= v[0, 0]
                continue
            acc = v if acc is None else acc @ v
        if acc is None:
            return np.array([[scalar_acc]])
        return scalar_acc * acc
    raise ExecutionError(f"cannot evaluate node {e!r}")


def oracle(eq: Equation, values: dict[str, np.ndarray]) -> np.ndarray:
    return evaluate(eq.rhs, values)


def eval_scalar(e: Expression, values: dict[str, np.ndarray]) -> float:
    v = evaluate(e, values)
    if not _is_scalar_value(v):
        raise ExecutionError("expected a scalar expression")
    return float(v[0, 0])


# --- running kernel calls -----------------------------------------------------------


def _arg_value(arg: Arg, values: dict[str, np.ndarray]) -> np.ndarray:
    if arg.kind == "scalar":
        return np.array([[eval_scalar(arg.scalar, values)]])
    if arg.kind == "identity":
        raise ExecutionError("identity argument needs explicit handling")
    v = values[arg.name]
    return v.T if arg.trans else v


def run_call(call: KernelCall, values: dict[str, np.ndarray], fl: Flops) -> tuple[np.ndarray, ...]:
    """Execute one kernel call against bound values; returns output arrays."""
    k = call.kernel

    if k == "potrf":
        (m,) = [_arg_value(a, values) for a in call.args]
        return (cholesky(m, fl),)
    if k == "geqrf":
        (m,) = [_arg_value(a, values) for a in call.args]
        return householder_qr(m, fl)
    if k == "syev":
        (m,) = [_arg_value(a, values) for a in call.args]
        z, w = jacobi_eig(m, fl)
        return z, w
    if k == "svd":
        (m,) = [_arg_value(a, values) for a in call.args]
        return svd_via_gram(m, fl)

    if k == "scal-add":
        a_s, a_m, b_s, b_m = call.args
        alpha = eval_scalar(a_s.scalar, values)
        beta = eval_scalar(b_s.scalar, values)
        left = None if a_m.kind == "identity" else _arg_value(a_m, values)
        right = None if b_m.kind == "identity" else _arg_value(b_m, values)
        if left is None and right is None:
            raise ExecutionError("scal-add of two identities")
        if left is None:
            left = np.eye(right.shape[0])
        if right is None:
            right = np.eye(left.shape[0])
        return (scal_add(alpha, left, beta, right, fl),)

    if k == "dot":
        x, y = [_arg_value(a, values) for a in call.args]
        return (dot(x, y, fl),)
    if k == "axpy":
        a_s, x_a, y_a = call.args
        alpha = eval_scalar(a_s.scalar, values)
        return (axpy(alpha, _arg_value(x_a, values), _arg_value(y_a, values), fl),)

    if k == "scal":
        side = call.meta_get("side", "right")
        invert = call.meta_get("invert", "no") == "yes"
        if side == "scalar":
            s_arg, a_arg = call.args
            factor = eval_scalar(s_arg.scalar, values)
            return (scal(_arg_value(a_arg, values), fl, factor=factor),)
        if side == "left":
            d_arg, a_arg = call.args
        else:
            a_arg, d_arg = call.args
        d = _arg_value(d_arg, values)
        a = _arg_value(a_arg, values)
        return (scal(a, fl, diag=d, side=side, invert=invert),)

    if k == "trsv" or k == "trsm":
        side = call.meta_get("side", "left")
        uplo = call.meta_get("uplo", "lower")
        if side == "right":
            b_arg, t_arg = call.args
        else:
            t_arg, b_arg = call.args
        t = values[t_arg.name]
        b = _arg_value(b_arg, values)
        lower = uplo == "lower"
        if side == "right":
            # X T = B  =>  T' X' = B'
            xt = solve_triangular(
                t, b.T, fl, lower=lower, trans=not t_arg.trans, counter=k
            )
            return (xt.T,)
        x = solve_triangular(t, b, fl, lower=lower, trans=t_arg.trans, counter=k)
        return (x,)

    if k == "syrk":
        form = call.meta_get("form", "gram")
        (a_arg,) = call.args
        a = _arg_value(a_arg, values)
        return (syrk(a, fl, gram=form == "gram"),)

    if k == "gemv":
        a_arg, x_arg = call.args
        return (gemv(_arg_value(a_arg, values), _arg_value(x_arg, values), fl),)
    if k == "gemm":
        a_arg, b_arg = call.args
        return (gemm(_arg_value(a_arg, values), _arg_value(b_arg, values), fl),)

    raise ExecutionError(f"unknown kernel {k!r}")


def execute(alg, env: dict[str, np.ndarray], fl: Flops | None = None) -> tuple[np.ndarray, Flops]:
    """Run an algorithm's statements in order; returns (result, counters).

    Accepts a plain algorithm (object with `statements` and `result`) or a
    scheduled one (handled by the sequence scheduler's executor).
    """
    from . import seqloop

    if isinstance(alg, seqloop.ScheduledAlgorithm):
        return seqloop.execute_scheduled(alg, env, fl)
    fl = fl if fl is not None else Flops()
    values = dict(env)
    for call in alg.statements:
        outs = run_call(call, values, fl)
        if len(outs) != len(call.outputs):
            raise ExecutionError(f"kernel {call.kernel} output arity mismatch")
        for name, v in zip(call.outputs, outs):
            values[name] = v
    return values[alg.result], fl


# --- conforming random instances ------------------------------------------------------


def resolve_size(s, sizes: dict[str, int]) -> int:
    if isinstance(s, int):
        return s
    try:
        return sizes[s]
    except KeyError:
        raise ExecutionError(f"no numeric size bound for symbol {s!r}") from None


def random_operand(
    props: frozenset[Property],
    rows: int,
    cols: int,
    rng: np.random.Generator,
    spd_symmetric: bool = True,
) -> np.ndarray:
    """Sample a matrix satisfying the declared structural properties."""
    if Property.IDENTITY in props:
        return np.eye(rows)
    if Property.SCALAR in props or (rows == 1 and cols == 1):
        return np.array([[rng.uniform(0.05, 0.95)]])
    if Property.SPD in props or (Property.SYMMETRIC in props and spd_symmetric):
        a = rng.standard_normal((rows, rows))
        g = a @ a.T
        g = g / np.linalg.norm(g, 2) + 1e-3 * np.eye(rows)
        return g
    if Property.SYMMETRIC in props and Property.DIAGONAL not in props:
        a = rng.standard_normal((rows, rows))
        return (a + a.T) / 2.0
    if Property.DIAGONAL in props:
        d = rng.uniform(0.5, 1.5, rows)
        if Property.SPD not in props:
            d *= rng.choice([-1.0, 1.0], rows)
        return np.diag(d)
    if Property.ORTHOGONAL_SQUARE in props or Property.ORTHONORMAL_COLUMNS in props:
        a = rng.standard_normal((rows, cols))
        q, _ = np.linalg.qr(a)
        return q[:, :cols]
    if Property.LOWER_TRIANGULAR in props or Property.UPPER_TRIANGULAR in props:
        a = np.tril(rng.standard_normal((rows, rows)))
        np.fill_diagonal(a, rng.uniform(0.8, 1.6, rows))
        return a if Property.LOWER_TRIANGULAR in props else a.T
    # general (optionally full-rank) matrix
    while True:
        a = rng.standard_normal((rows, cols))
        if Property.FULL_RANK not in props:
            return a
        smin = np.linalg.svd(a, compute_uv=False)[-1]
        if smin > 0.15:
            return a


def random_instance(
    ctx: PropertyContext,
    sizes: dict[str, int],
    rng: np.random.Generator,
    spd_symmetric: bool = True,
) -> dict[str, np.ndarray]:
    """Bind every non-output operand to a conforming random matrix."""
    out: dict[str, np.ndarray] = {}
    for name in sorted(ctx.operands):
        info = ctx.operands[name]
        if Property.OUTPUT in info.properties:
            continue
        rows = resolve_size(info.rows, sizes)
        cols = resolve_size(info.cols, sizes)
        out[name] = random_operand(
            ctx.declared(name), rows, cols, rng, spd_symmetric=spd_symmetric
        )
    return out


# --- debugging dumps (little-endian binary) ---------------------------------------------


def dump_matrix(path: str, m: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(np.array(m.shape, dtype="<u4").tobytes())
        f.write(m.astype("<f8").tobytes())


def load_matrix(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        shape = np.frombuffer(f.read(8), dtype="<u4")
        data = np.frombuffer(f.read(), dtype="<f8")
    return data.reshape(int(shape[0]), int(shape[1])).copy()
