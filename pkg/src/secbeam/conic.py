"""A small conic-program IR with sparse lowering to Clarabel or SCS.

Problems are built from four constraint kinds over real scalar variables:

* ``Linear``: a.x + b  {<=, ==, >=}  0
* ``QuadLeAffine``: sum_i (a_i.x + b_i)^2 + c  <=  affine
* ``NormLeAffine``: || vector of affine terms ||  <=  affine
* ``TwoPowLeAffine``: 2^(affine)  <=  affine

Complex vector variables expand to a real and an imaginary block of equal
length. Alongside the scalar bookkeeping every variable and constraint is
registered with an abstract multiplicity, so that a problem can report its
modeling-level size (one count per complex vector entry, one count per
constraint family member) independently of the lowered representation.

Quadratic bounds lower to second-order cones via
``||v||^2 <= t  <=>  ||(2v, t-1)|| <= t+1`` and power bounds to the
exponential cone via ``(x ln2, 1, rhs)``.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LN2 = float(np.log(2.0))

STATUS_OPTIMAL = "optimal"
STATUS_INACCURATE = "inaccurate"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_NUMERICAL = "numerical-limit"


class ConfigError(ValueError):
    """Raised for structurally invalid problem input."""


# ---------------------------------------------------------------------------
# affine expressions


class LinExpr:
    """Sparse affine scalar a.x + b over problem variables."""

    __slots__ = ("coef", "const")

    def __init__(self, coef=None, const=0.0):
        self.coef = dict(coef) if coef else {}
        self.const = float(const)

    def copy(self):
        return LinExpr(self.coef, self.const)

    def __add__(self, other):
        out = self.copy()
        if isinstance(other, LinExpr):
            for j, c in other.coef.items():
                out.coef[j] = out.coef.get(j, 0.0) + c
            out.const += other.const
        else:
            out.const += float(other)
        return out

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({j: -c for j, c in self.coef.items()}, -self.const)

    def __sub__(self, other):
        return self + (-other if isinstance(other, LinExpr) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, scale):
        scale = float(scale)
        return LinExpr({j: c * scale for j, c in self.coef.items()},
                       self.const * scale)

    __rmul__ = __mul__

    def value(self, x):
        out = self.const
        for j, c in self.coef.items():
            out += c * x[j]
        return out


def as_expr(obj):
    if isinstance(obj, LinExpr):
        return obj
    if isinstance(obj, (int, float, np.floating, np.integer)):
        return LinExpr(const=float(obj))
    raise TypeError(f"expected an affine expression or number, got {type(obj)!r}")


def dot_expr(indices, coeffs, const=0.0) -> LinExpr:
    """Fast inner-product expression sum_j coeffs[j] * x[indices[j]] + const."""
    coeffs = np.asarray(coeffs, dtype=float)
    return LinExpr(dict(zip((int(i) for i in indices), coeffs.tolist())), const)


@dataclass
class VarVec:
    """A contiguous block of real scalar variables."""

    name: str
    offset: int
    n: int

    def __getitem__(self, j) -> LinExpr:
        if not 0 <= j < self.n:
            raise IndexError(j)
        return LinExpr({self.offset + j: 1.0})

    @property
    def indices(self):
        return np.arange(self.offset, self.offset + self.n)

    def sum(self) -> LinExpr:
        return LinExpr({int(j): 1.0 for j in self.indices})


@dataclass
class ComplexVec:
    """A complex vector variable stored as stacked real and imaginary blocks."""

    name: str
    re: VarVec
    im: VarVec

    @property
    def n(self):
        return self.re.n

    def dot(self, a):
        """Affine (Re, Im) parts of a^T z for a constant complex vector a."""
        a = np.asarray(a, dtype=complex).reshape(-1)
        re = dot_expr(self.re.indices, a.real) + dot_expr(self.im.indices, -a.imag)
        im = dot_expr(self.re.indices, a.imag) + dot_expr(self.im.indices, a.real)
        return re, im


# ---------------------------------------------------------------------------
# constraints


@dataclass
class LinearCon:
    expr: LinExpr  # canonical: expr >= 0, or expr == 0
    equality: bool


@dataclass
class QuadLeAffineCon:
    terms: list
    const: float
    rhs: LinExpr


@dataclass
class NormLeAffineCon:
    terms: list
    rhs: LinExpr


@dataclass
class TwoPowLeAffineCon:
    exponent: LinExpr
    rhs: LinExpr


@dataclass
class SolveResult:
    """Backend-independent outcome. ``status`` is one of optimal,
    inaccurate, infeasible, unbounded or numerical-limit; solving never
    raises. An inaccurate solution is a returned iterate that narrowly
    missed the backend tolerances; callers that use it must validate it
    against their own invariants."""

    status: str
    x: np.ndarray
    objective: float
    backend_status: str = ""
    solve_time: float = 0.0

    def value(self, ref):
        if isinstance(ref, ComplexVec):
            return (self.x[ref.re.indices] + 1j * self.x[ref.im.indices])
        if isinstance(ref, VarVec):
            return self.x[ref.indices].copy()
        if isinstance(ref, LinExpr):
            return ref.value(self.x)
        raise TypeError(f"cannot extract value for {type(ref)!r}")


class ConicProblem:
    """Incrementally built maximize-linear conic program."""

    def __init__(self):
        self.n_scalars = 0
        self.variables = []
        self.constraints = []
        self._con_counts = []
        self.objective = LinExpr()
        self.abstract_vars = 0
        self.abstract_cons = 0

    # -- variables ---------------------------------------------------------

    def add_real_vars(self, name, n, count=None) -> VarVec:
        if n < 0:
            raise ConfigError("variable length must be nonnegative")
        v = VarVec(name, self.n_scalars, n)
        self.n_scalars += n
        self.variables.append(v)
        self.abstract_vars += n if count is None else count
        return v

    def add_complex_vars(self, name, n, count=None) -> ComplexVec:
        # exactly 2n scalars: a real block then an imaginary block
        re = VarVec(name + ".re", self.n_scalars, n)
        self.n_scalars += n
        im = VarVec(name + ".im", self.n_scalars, n)
        self.n_scalars += n
        v = ComplexVec(name, re, im)
        self.variables.append(v)
        self.abstract_vars += n if count is None else count
        return v

    # -- objective and constraints ----------------------------------------

    def set_objective_max(self, expr):
        self.objective = as_expr(expr)

    def _register(self, con, count):
        self.constraints.append(con)
        self._con_counts.append(count)
        self.abstract_cons += count

    def add_linear(self, lhs, op, rhs=0.0, count=1):
        lhs = as_expr(lhs)
        rhs = as_expr(rhs)
        if op == "<=":
            self._register(LinearCon(rhs - lhs, False), count)
        elif op == ">=":
            self._register(LinearCon(lhs - rhs, False), count)
        elif op == "==":
            self._register(LinearCon(lhs - rhs, True), count)
        else:
            raise ConfigError(f"unknown comparison {op!r}")

    def add_quad_le_affine(self, terms, const, rhs, count=1):
        """sum_i terms_i(x)^2 + const <= rhs(x)."""
        terms = [as_expr(t) for t in terms]
        if const < 0.0:
            raise ConfigError("quadratic offset must be nonnegative")
        self._register(QuadLeAffineCon(terms, float(const), as_expr(rhs)), count)

    def add_norm_le_affine(self, terms, rhs, count=1):
        terms = [as_expr(t) for t in terms]
        self._register(NormLeAffineCon(terms, as_expr(rhs)), count)

    def add_two_pow_le_affine(self, exponent, rhs, count=1):
        """2^exponent(x) <= rhs(x)."""
        self._register(TwoPowLeAffineCon(as_expr(exponent), as_expr(rhs)), count)

    # -- reporting ---------------------------------------------------------

    def stats(self):
        """Abstract (variable, constraint) counts as registered at build."""
        return self.abstract_vars, self.abstract_cons

    def max_violation(self, x):
        """Replay every constraint at x and return the worst violation."""
        worst = 0.0
        for con in self.constraints:
            worst = max(worst, _violation(con, x))
        return worst

    # -- lowering ----------------------------------------------------------

    def lower(self):
        """Group rows by cone: equalities, inequalities, SOC blocks, exp
        blocks. Returns (A, b, q, cone spec) with s = b - A x in K."""
        zero_rows, nonneg_rows = [], []
        soc_blocks, exp_blocks = [], []
        for con in self.constraints:
            if isinstance(con, LinearCon):
                (zero_rows if con.equality else nonneg_rows).append(con.expr)
            elif isinstance(con, QuadLeAffineCon):
                t = con.rhs - con.const
                block = [t + 1.0]
                block.extend(2.0 * term for term in con.terms)
                block.append(t - 1.0)
                soc_blocks.append(block)
            elif isinstance(con, NormLeAffineCon):
                soc_blocks.append([con.rhs] + list(con.terms))
            elif isinstance(con, TwoPowLeAffineCon):
                exp_blocks.append([con.exponent * LN2, LinExpr(const=1.0),
                                   con.rhs])
            else:  # pragma: no cover
                raise ConfigError(f"unknown constraint {type(con)!r}")

        rows = zero_rows + nonneg_rows
        soc_dims = []
        for block in soc_blocks:
            rows.extend(block)
            soc_dims.append(len(block))
        for block in exp_blocks:
            rows.extend(as_expr(e) for e in block)

        data, ridx, cidx, b = [], [], [], []
        for i, expr in enumerate(rows):
            b.append(expr.const)
            for j, c in expr.coef.items():
                if c != 0.0:
                    ridx.append(i)
                    cidx.append(j)
                    data.append(-c)  # s = b - A x reproduces expr(x)
        a_mat = sp.csc_matrix(
            (data, (ridx, cidx)), shape=(len(rows), self.n_scalars))
        b = np.asarray(b, dtype=float)
        q = np.zeros(self.n_scalars)
        for j, c in self.objective.coef.items():
            q[j] = -c  # maximize -> minimize
        spec = {
            "zero": len(zero_rows),
            "nonneg": len(nonneg_rows),
            "soc": soc_dims,
            "exp": len(exp_blocks),
        }
        return a_mat, b, q, spec


def _violation(con, x):
    if isinstance(con, LinearCon):
        v = con.expr.value(x)
        return abs(v) if con.equality else max(0.0, -v)
    if isinstance(con, QuadLeAffineCon):
        lhs = sum(t.value(x) ** 2 for t in con.terms) + con.const
        return max(0.0, lhs - con.rhs.value(x))
    if isinstance(con, NormLeAffineCon):
        lhs = float(np.hypot.reduce([t.value(x) for t in con.terms]))
        return max(0.0, lhs - con.rhs.value(x))
    if isinstance(con, TwoPowLeAffineCon):
        return max(0.0, 2.0 ** con.exponent.value(x) - con.rhs.value(x))
    raise ConfigError(f"unknown constraint {type(con)!r}")


# ---------------------------------------------------------------------------
# backends


def solve(problem: ConicProblem, backend="auto", tol=1e-8) -> SolveResult:
    """Solve and classify the outcome.

    ``auto`` tries the interior-point backend first and falls back to the
    splitting backend when it reports a numerical failure; badly scaled
    instances (near-flat objective directions) routinely stall the former
    and not the latter. Backend failures surface as a numerical-limit
    status, never as an exception; both backends are deterministic, so
    the fallback chain is too.
    """
    if backend not in ("auto", "clarabel", "scs"):
        raise ConfigError(f"unknown backend {backend!r}")
    t0 = time.perf_counter()
    a_mat, b, q, spec = problem.lower()
    order = ("clarabel", "scs") if backend == "auto" else (backend,)
    raws = []
    status, x = STATUS_NUMERICAL, None
    for name in order:
        fn = _solve_clarabel if name == "clarabel" else _solve_scs
        try:
            status, x, raw = fn(a_mat, b, q, spec, tol)
        except Exception as exc:  # solver blew up; report, do not crash
            status, x, raw = STATUS_NUMERICAL, None, f"exception: {exc}"
        raws.append(f"{name}:{raw}")
        if status != STATUS_NUMERICAL:
            break
    if x is None or not np.all(np.isfinite(x)):
        x = np.zeros(problem.n_scalars)
    usable = status in (STATUS_OPTIMAL, STATUS_INACCURATE)
    obj = problem.objective.value(x) if usable else float("nan")
    return SolveResult(status, np.asarray(x, dtype=float), obj,
                       " -> ".join(raws), time.perf_counter() - t0)


def _clarabel_cones(spec):
    import clarabel

    cones = []
    if spec["zero"]:
        cones.append(clarabel.ZeroConeT(spec["zero"]))
    if spec["nonneg"]:
        cones.append(clarabel.NonnegativeConeT(spec["nonneg"]))
    for d in spec["soc"]:
        cones.append(clarabel.SecondOrderConeT(d))
    for _ in range(spec["exp"]):
        cones.append(clarabel.ExponentialConeT())
    return cones


def _solve_clarabel(a_mat, b, q, spec, tol):
    import clarabel

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    p_mat = sp.csc_matrix((len(q), len(q)))
    solver = clarabel.DefaultSolver(p_mat, q, a_mat, b,
                                    _clarabel_cones(spec), settings)
    sol = solver.solve()
    name = str(sol.status)
    if name == "Solved":
        status = STATUS_OPTIMAL
    elif name == "AlmostSolved":
        status = STATUS_INACCURATE
    elif name == "PrimalInfeasible":
        status = STATUS_INFEASIBLE
    elif name == "DualInfeasible":
        status = STATUS_UNBOUNDED
    else:
        status = STATUS_NUMERICAL
    return status, np.asarray(sol.x, dtype=float), name


def _solve_scs(a_mat, b, q, spec, tol):
    import scs

    cone = {}
    if spec["zero"]:
        cone["z"] = spec["zero"]
    if spec["nonneg"]:
        cone["l"] = spec["nonneg"]
    if spec["soc"]:
        cone["q"] = spec["soc"]
    if spec["exp"]:
        cone["ep"] = spec["exp"]
    data = {"A": a_mat.tocsc(), "b": b, "c": q}
    out = scs.solve(data, cone, verbose=False, eps_abs=tol, eps_rel=tol,
                    max_iters=200_000)
    name = out["info"]["status"]
    if name == "solved":
        status = STATUS_OPTIMAL
    elif name.startswith("solved"):  # reduced-accuracy variants
        status = STATUS_INACCURATE
    elif "infeasible" in name:
        status = STATUS_INFEASIBLE
    elif "unbounded" in name:
        status = STATUS_UNBOUNDED
    else:
        status = STATUS_NUMERICAL
    return status, np.asarray(out["x"], dtype=float), name


# ---------------------------------------------------------------------------
# dump


def dump_problem(problem: ConicProblem, fh):
    """Write a readable structured-text form of the problem."""
    fh.write("# secbeam conic problem dump v1\n")
    fh.write(f"scalars {problem.n_scalars}\n")
    av, ac = problem.stats()
    fh.write(f"abstract {av} {ac}\n")
    for v in problem.variables:
        if isinstance(v, ComplexVec):
            fh.write(f"cvar {v.name} re@{v.re.offset} im@{v.im.offset} n={v.n}\n")
        else:
            fh.write(f"var {v.name} @{v.offset} n={v.n}\n")

    def fmt(expr):
        parts = [f"{expr.const!r}"]
        for j in sorted(expr.coef):
            parts.append(f"{j}:{expr.coef[j]!r}")
        return " ".join(parts)

    fh.write(f"objective max {fmt(problem.objective)}\n")
    for con in problem.constraints:
        if isinstance(con, LinearCon):
            kind = "eq0" if con.equality else "ge0"
            fh.write(f"linear {kind} {fmt(con.expr)}\n")
        elif isinstance(con, QuadLeAffineCon):
            fh.write(f"quad c={con.const!r} rhs {fmt(con.rhs)}\n")
            for t in con.terms:
                fh.write(f"  term {fmt(t)}\n")
        elif isinstance(con, NormLeAffineCon):
            fh.write(f"norm rhs {fmt(con.rhs)}\n")
            for t in con.terms:
                fh.write(f"  term {fmt(t)}\n")
        elif isinstance(con, TwoPowLeAffineCon):
            fh.write(f"twopow exp {fmt(con.exponent)} rhs {fmt(con.rhs)}\n")
