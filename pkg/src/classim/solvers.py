"""Linear and semidefinite programming with recomputed optimality certificates.

LPs run on HiGHS (through scipy) and SDPs on an interior-point conic backend
(through cvxpy). In both cases the duality gap and feasibility residuals
reported in SolverSolution are recomputed here from the returned primal/dual
pair; solver-claimed status alone is never trusted. A solution is labelled
"optimal" only when those recomputed certificates meet the requested
tolerance, otherwise SolverFailure is raised with the diagnostics.

Complex Hermitian SDP blocks are embedded as real symmetric 2n x 2n blocks
via [[Re, -Im], [Im, Re]]. Trace pairings in the embedding are twice the
complex-convention values, so HermitianProgram halves the data matrices on
the way in; callers see complex-convention numbers throughout.

Both problem types serialize to a line-oriented text dump (bit-exact float
round trip via repr) for debugging and for bridging to external engines.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from . import linalg
from .errors import SolverFailure, ValidationError

_SDP_SOLVER_ORDER = ("CLARABEL", "CVXOPT", "SCS")


@dataclass
class SolverSolution:
    """Solver output with certificates recomputed from the solution data."""

    status: str  # "optimal" | "infeasible" | "max-iterations"
    primal: object
    value: float
    gap: float
    residual: float


# ---------------------------------------------------------------------------
# linear programs


class LinearProgram:
    """max c.x subject to A x = b, with per-variable lower bound 0 or -inf.

    Rows are appended as sparse triplets and never materialized densely,
    so problems in the 10^4-10^5 variable range stay cheap to assemble.
    """

    def __init__(self, num_vars: int):
        if num_vars < 1:
            raise ValidationError(f"need at least one variable, got {num_vars}")
        self.num_vars = num_vars
        self.objective = np.zeros(num_vars)
        self.rhs: list[float] = []
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._free = np.zeros(num_vars, dtype=bool)

    @property
    def num_rows(self) -> int:
        return len(self.rhs)

    def set_objective(self, col: int, coeff: float) -> None:
        self._check_cols([col], [coeff])
        self.objective[col] = coeff

    def set_free(self, col: int) -> None:
        if not 0 <= col < self.num_vars:
            raise ValidationError(f"variable index {col} out of range")
        self._free[col] = True

    def is_free(self, col: int) -> bool:
        return bool(self._free[col])

    def add_row(self, cols, vals, rhs: float) -> None:
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        self._check_cols(cols, vals)
        if not math.isfinite(rhs):
            raise ValidationError("row right-hand side is not finite")
        r = len(self.rhs)
        self._rows.append(np.full(len(cols), r, dtype=np.int64))
        self._cols.append(cols)
        self._vals.append(vals)
        self.rhs.append(float(rhs))

    def _check_cols(self, cols, vals) -> None:
        cols = np.asarray(cols)
        vals = np.asarray(vals, dtype=float)
        if cols.shape != vals.shape:
            raise ValidationError("column/value arrays differ in length")
        if cols.size and (cols.min() < 0 or cols.max() >= self.num_vars):
            raise ValidationError("column index out of range")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("non-finite coefficient in row")

    def matrix(self) -> sp.csr_matrix:
        rows = np.concatenate(self._rows) if self._rows else np.empty(0, dtype=np.int64)
        cols = np.concatenate(self._cols) if self._cols else np.empty(0, dtype=np.int64)
        vals = np.concatenate(self._vals) if self._vals else np.empty(0)
        return sp.coo_matrix(
            (vals, (rows, cols)), shape=(self.num_rows, self.num_vars)
        ).tocsr()


def solve_lp(program: LinearProgram, tol: float = 1e-9) -> SolverSolution:
    """Solve the LP and certify the result.

    The returned gap is |primal - dual| recomputed from the HiGHS marginals;
    reduced-cost violations and the equality residual are checked against
    tol before the solution may be called optimal.
    """
    a = program.matrix()
    b = np.asarray(program.rhs)
    bounds = [(None, None) if program.is_free(j) else (0, None) for j in range(program.num_vars)]
    res = linprog(
        -program.objective,
        A_eq=a,
        b_eq=b,
        bounds=bounds,
        method="highs",
        options={
            "primal_feasibility_tolerance": min(tol, 1e-9),
            "dual_feasibility_tolerance": min(tol, 1e-9),
        },
    )
    if res.status == 2:
        return SolverSolution("infeasible", None, math.nan, math.inf, math.inf)
    if res.status == 1:
        return SolverSolution("max-iterations", None, math.nan, math.inf, math.inf)
    if res.status != 0:
        raise SolverFailure(f"LP solve failed: {res.message}")

    x = np.asarray(res.x)
    value = float(program.objective @ x)
    residual = linalg.max_abs(a @ x - b)
    y = -np.asarray(res.eqlin.marginals)  # sign flip: scipy solves the minimization
    dual_value = float(b @ y)
    reduced = program.objective - a.T @ y
    dual_violation = 0.0
    for j in range(program.num_vars):
        r = reduced[j]
        dual_violation = max(dual_violation, abs(r) if program.is_free(j) else r)
    gap = abs(value - dual_value)
    scale = max(1.0, abs(value))
    if residual > tol * scale or gap > tol * scale or dual_violation > tol * scale:
        raise SolverFailure(
            f"LP certificates out of tolerance: residual={residual:.3e} "
            f"gap={gap:.3e} dual violation={dual_violation:.3e} (tol {tol:.1e})"
        )
    return SolverSolution("optimal", x, value, gap, residual)


def dump_lp(program: LinearProgram) -> str:
    """Line-oriented text dump; floats use repr so the round trip is bit exact."""
    lines = [f"lp {program.num_vars} {program.num_rows}"]
    nz = np.nonzero(program.objective)[0]
    lines.append("obj " + " ".join(f"{j} {float(program.objective[j])!r}" for j in nz))
    lines.append("free " + " ".join(str(j) for j in np.nonzero(program._free)[0]))
    for r, c, v, rhs in zip(program._rows, program._cols, program._vals, program.rhs):
        body = " ".join(f"{j} {float(x)!r}" for j, x in zip(c, v))
        lines.append(f"row {float(rhs)!r} : {body}")
    return "\n".join(lines) + "\n"


def dump_lp_solution(status: str, x, duals=None) -> str:
    """Solution text for the external-engine bridge (same repr convention)."""
    lines = [f"solution {status} {len(np.asarray(x))}"]
    for j, v in enumerate(np.asarray(x, dtype=float)):
        if v != 0.0:
            lines.append(f"x {j} {float(v)!r}")
    if duals is not None:
        for i, v in enumerate(np.asarray(duals, dtype=float)):
            lines.append(f"y {i} {float(v)!r}")
    return "\n".join(lines) + "\n"


def parse_lp_solution(text: str):
    """Parse a bridge solution dump into (status, x, duals-or-None)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "solution":
        raise ValidationError("not an LP solution dump")
    status = head[1]
    x = np.zeros(int(head[2]))
    duals: dict[int, float] = {}
    for ln in lines[1:]:
        tag, idx, val = ln.split()
        if tag == "x":
            x[int(idx)] = float(val)
        elif tag == "y":
            duals[int(idx)] = float(val)
        else:
            raise ValidationError(f"unknown solution dump line: {ln!r}")
    y = None
    if duals:
        y = np.zeros(max(duals) + 1)
        for i, v in duals.items():
            y[i] = v
    return status, x, y


def certify_lp_solution(
    program: LinearProgram, x, duals=None, tol: float = 1e-9
) -> SolverSolution:
    """Recompute certificates for an externally produced primal (and duals).

    Without duals the gap is unknown and reported as inf; the primal residual
    and objective value are always recomputed here.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (program.num_vars,):
        raise ValidationError(f"expected {program.num_vars} primal values")
    a = program.matrix()
    b = np.asarray(program.rhs)
    value = float(program.objective @ x)
    residual = linalg.max_abs(a @ x - b)
    if x.min() < -tol and not all(program.is_free(j) for j in np.nonzero(x < -tol)[0]):
        raise ValidationError("primal violates a nonnegativity bound")
    gap = math.inf
    if duals is not None:
        y = np.zeros(program.num_rows)
        y[: len(duals)] = duals
        gap = abs(value - float(b @ y))
    status = "optimal" if residual <= tol * max(1.0, abs(value)) and gap <= tol * max(
        1.0, abs(value)
    ) else "max-iterations"
    return SolverSolution(status, x, value, gap, residual)


def parse_lp(text: str) -> LinearProgram:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "lp":
        raise ValidationError("not an LP dump")
    program = LinearProgram(int(head[1]))
    for ln in lines[1:]:
        tokens = ln.split()
        if tokens[0] == "obj":
            for j, v in zip(tokens[1::2], tokens[2::2]):
                program.set_objective(int(j), float(v))
        elif tokens[0] == "free":
            for j in tokens[1:]:
                program.set_free(int(j))
        elif tokens[0] == "row":
            rhs = float(tokens[1])
            body = tokens[3:]
            cols = [int(j) for j in body[0::2]]
            vals = [float(v) for v in body[1::2]]
            program.add_row(cols, vals, rhs)
        else:
            raise ValidationError(f"unknown LP dump line: {ln!r}")
    if program.num_rows != int(head[2]):
        raise ValidationError("LP dump row count mismatch")
    return program


# ---------------------------------------------------------------------------
# semidefinite programs


def _assert_symmetric(m, dim: int, what: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (dim, dim):
        raise ValidationError(f"{what}: expected shape {(dim, dim)}, got {m.shape}")
    if linalg.max_abs(m - m.T) > 1e-12:
        raise ValidationError(f"{what}: not symmetric")
    return m


class SemidefiniteProgram:
    """max sum_j Tr(C_j X_j) over PSD symmetric blocks, under trace equalities.

    Every constraint is a real scalar row sum_j Tr(A_ij X_j) = b_i with
    symmetric data matrices A_ij (absent blocks contribute nothing).
    """

    def __init__(self, block_dims):
        dims = [int(n) for n in block_dims]
        if not dims or any(n < 1 for n in dims):
            raise ValidationError(f"bad block dimensions {block_dims}")
        self.block_dims = dims
        self.objective = [np.zeros((n, n)) for n in dims]
        self.constraints: list[tuple[dict[int, np.ndarray], float]] = []

    def set_objective(self, block: int, c) -> None:
        self.objective[block] = _assert_symmetric(
            c, self.block_dims[block], f"objective block {block}"
        )

    def add_constraint(self, blocks: dict, rhs: float) -> None:
        checked = {}
        for j, a in blocks.items():
            checked[j] = _assert_symmetric(
                a, self.block_dims[j], f"constraint {len(self.constraints)}, block {j}"
            )
        if not math.isfinite(rhs):
            raise ValidationError("constraint right-hand side is not finite")
        self.constraints.append((checked, float(rhs)))


def _sdp_certificates(program: SemidefiniteProgram, xs, ys):
    """(primal value, residual, gap) recomputed from a primal/dual pair.

    The dual slack per block is Z_j = sum_i y_i A_ij - C_j; its most negative
    eigenvalue is charged against the gap at the block's primal trace, which
    is exact whenever the constraints pin the block traces (true for every
    program built in this package).
    """
    value = sum(float(np.tensordot(c, x)) for c, x in zip(program.objective, xs))
    residual = 0.0
    for (blocks, rhs), y in zip(program.constraints, ys):
        lhs = sum(float(np.tensordot(a, xs[j])) for j, a in blocks.items())
        residual = max(residual, abs(lhs - rhs))
    for x in xs:
        wmin = float(np.linalg.eigvalsh(x)[0])
        residual = max(residual, max(0.0, -wmin))
    dual_value = sum(y * rhs for (blocks, rhs), y in zip(program.constraints, ys))
    gap = abs(value - dual_value)
    for j, n in enumerate(program.block_dims):
        z = -program.objective[j].copy()
        for (blocks, _), y in zip(program.constraints, ys):
            if j in blocks:
                z += y * blocks[j]
        wmin = float(np.linalg.eigvalsh(z)[0])
        if wmin < 0.0:
            gap += -wmin * max(float(np.trace(xs[j])), 1.0)
    return value, residual, gap


def solve_sdp(program: SemidefiniteProgram, tol: float = 1e-8) -> SolverSolution:
    """Solve the SDP on the first available interior-point backend.

    Tries progressively tighter solver settings until the recomputed
    certificates meet tol; raises SolverFailure if none succeed.
    """
    import cvxpy as cp

    xs = [cp.Variable((n, n), symmetric=True) for n in program.block_dims]
    cons = [x >> 0 for x in xs]
    eq = []
    for blocks, rhs in program.constraints:
        expr = sum(cp.trace(a @ xs[j]) for j, a in blocks.items())
        eq.append(expr == rhs)
    objective = cp.Maximize(
        sum(cp.trace(c @ x) for c, x in zip(program.objective, xs))
    )
    problem = cp.Problem(objective, cons + eq)

    solver = next(s for s in _SDP_SOLVER_ORDER if s in cp.installed_solvers())
    last_diag = ""
    for attempt, opts in enumerate(_sdp_options(solver, tol)):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # inaccuracy warnings; we recheck below
                problem.solve(solver=solver, **opts)
        except cp.error.SolverError as exc:
            last_diag = str(exc)
            continue
        if problem.status in ("infeasible", "infeasible_inaccurate"):
            return SolverSolution("infeasible", None, math.nan, math.inf, math.inf)
        if problem.status in ("unbounded", "unbounded_inaccurate"):
            raise SolverFailure("SDP is unbounded")
        if xs[0].value is None or any(c.dual_value is None for c in eq):
            last_diag = f"status {problem.status} without primal/dual values"
            continue
        prim = [np.asarray(x.value) for x in xs]
        prim = [(p + p.T) / 2 for p in prim]
        ys = [float(c.dual_value) for c in eq]
        value, residual, gap = _sdp_certificates(program, prim, ys)
        scale = max(1.0, abs(value))
        if residual <= tol * scale and gap <= tol * scale:
            return SolverSolution("optimal", prim, value, gap, residual)
        last_diag = (
            f"attempt {attempt}: residual={residual:.3e} gap={gap:.3e} (tol {tol:.1e})"
        )
    raise SolverFailure(f"SDP certificates out of tolerance: {last_diag}")


def _sdp_options(solver: str, tol: float):
    eps = max(min(tol * 1e-2, 1e-9), 1e-12)
    if solver == "CLARABEL":
        return [
            {},
            {"tol_gap_abs": eps, "tol_gap_rel": eps, "tol_feas": eps},
            {"tol_gap_abs": eps * 100, "tol_gap_rel": eps * 100, "tol_feas": eps * 100,
             "max_iter": 400},
        ]
    if solver == "CVXOPT":
        return [{}, {"abstol": eps, "reltol": eps, "feastol": eps}]
    return [{}, {"eps_abs": eps, "eps_rel": eps, "max_iters": 100_000}]


# Hermitian embedding -------------------------------------------------------


def embed_hermitian(h) -> np.ndarray:
    """Real symmetric [[Re, -Im], [Im, Re]] embedding of a Hermitian matrix."""
    h = linalg.assert_hermitian(h)
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def unembed_hermitian(s) -> np.ndarray:
    """Hermitian matrix recovered from a (J-averaged) symmetric embedding."""
    s = np.asarray(s, dtype=float)
    n = s.shape[0] // 2
    re = (s[:n, :n] + s[n:, n:]) / 2.0
    im = (s[n:, :n] - s[n:, :n].T) / 2.0
    return re + 1j * im


class HermitianProgram:
    """Complex Hermitian face of SemidefiniteProgram.

    Blocks are Hermitian PSD matrices; data are stored in the real symmetric
    embedding with an extra factor 1/2 so objective and constraint values keep
    the complex convention. Real 1 x 1 blocks (for scalar variables such as a
    visibility) pass through unembedded.
    """

    def __init__(self, block_dims, real_blocks=()):
        self.block_dims = [int(n) for n in block_dims]
        self._real = set(real_blocks)
        dims = [
            n if j in self._real else 2 * n for j, n in enumerate(self.block_dims)
        ]
        self.sdp = SemidefiniteProgram(dims)

    def _embed(self, block: int, a) -> np.ndarray:
        if block in self._real:
            return np.atleast_2d(np.asarray(a, dtype=float))
        return embed_hermitian(a) / 2.0

    def set_objective(self, block: int, c) -> None:
        self.sdp.set_objective(block, self._embed(block, c))

    def add_constraint(self, blocks: dict, rhs: float) -> None:
        self.sdp.add_constraint(
            {j: self._embed(j, a) for j, a in blocks.items()}, rhs
        )

    def add_matrix_equality(self, coeffs: dict, target, basis) -> None:
        """Rows for sum_j coeffs[j] X_j = target, expanded over a HermitianBasis.

        coeffs values may be real scalars or, for real 1 x 1 blocks, Hermitian
        matrices pairing the scalar against the basis element.
        """
        for b in basis.elements:
            row = {}
            for j, c in coeffs.items():
                if j in self._real:
                    row[j] = [[float(np.real(np.trace(b @ c)))]]
                else:
                    row[j] = c * b
            self.add_constraint(row, float(np.real(np.trace(b @ target))))

    def solve(self, tol: float = 1e-8) -> SolverSolution:
        sol = solve_sdp(self.sdp, tol)
        if sol.status != "optimal":
            return sol
        blocks = []
        for j, s in enumerate(sol.primal):
            if j in self._real:
                blocks.append(np.asarray(s, dtype=float))
            else:
                blocks.append(unembed_hermitian(s))
        return SolverSolution(sol.status, blocks, sol.value, sol.gap, sol.residual)


def dump_sdp(program: SemidefiniteProgram) -> str:
    """Line-oriented dump of block dims, objective and constraints (bit exact)."""
    lines = ["sdp " + " ".join(str(n) for n in program.block_dims)]
    for j, c in enumerate(program.objective):
        rows, cols = np.nonzero(c)
        body = " ".join(
            f"{r} {q} {float(c[r, q])!r}" for r, q in zip(rows, cols) if r <= q
        )
        lines.append(f"obj {j} : {body}")
    for blocks, rhs in program.constraints:
        parts = []
        for j in sorted(blocks):
            a = blocks[j]
            rows, cols = np.nonzero(a)
            for r, q in zip(rows, cols):
                if r <= q:
                    parts.append(f"{j} {r} {q} {float(a[r, q])!r}")
        lines.append(f"con {float(rhs)!r} : " + " ".join(parts))
    return "\n".join(lines) + "\n"


def parse_sdp(text: str) -> SemidefiniteProgram:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "sdp":
        raise ValidationError("not an SDP dump")
    program = SemidefiniteProgram([int(n) for n in head[1:]])
    for ln in lines[1:]:
        tag, _, body = ln.partition(" : ")
        tokens = body.split()
        if tag.startswith("obj"):
            j = int(tag.split()[1])
            c = np.zeros((program.block_dims[j],) * 2)
            for r, q, v in zip(tokens[0::3], tokens[1::3], tokens[2::3]):
                c[int(r), int(q)] = c[int(q), int(r)] = float(v)
            program.set_objective(j, c)
        elif tag.startswith("con"):
            rhs = float(tag.split()[1])
            blocks: dict[int, np.ndarray] = {}
            for j, r, q, v in zip(tokens[0::4], tokens[1::4], tokens[2::4], tokens[3::4]):
                j = int(j)
                a = blocks.setdefault(j, np.zeros((program.block_dims[j],) * 2))
                a[int(r), int(q)] = a[int(q), int(r)] = float(v)
            program.add_constraint(blocks, rhs)
        else:
            raise ValidationError(f"unknown SDP dump line: {ln!r}")
    return program
