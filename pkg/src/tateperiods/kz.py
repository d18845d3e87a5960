"""Transport for connections with regular singularities on the rational line.

The connection is d f = f . sum_p X_p dz/(z - p) (right multiplication, factors
multiply in path order).  The Drinfeld associator is assembled symbolically
from shuffle-regularized words; `numeric_transport_oracle` solves the actual
horizontal-section problem at arbitrary precision and is the package's
independent check on every sign and ordering convention.

Oracle scheme: at a singular endpoint the normalized solution factors as
exp(X log u) . H(z) with u the local parameter of the tangential point and H
the unique analytic Frobenius tail, computed by a weight-graded power-series
recursion; between the endpoint disks the system is integrated on panels by
Chebyshev-Lobatto collocation, panels subdivided until every panel is at least
three half-widths away from the singularities.  Every transport runs twice at
different resolutions and the runs must agree to the precision budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import mpmath as mp

from .errors import NumericBudgetError, PreconditionError
from .mzv import KZ_LETTERS, X0, X1, shuffle_regularize
from .ncalg import NCSeries, nc_exp, nc_inverse, nc_multiply, substitute_letters
from .periodring import PeriodElem

INF = "inf"


@dataclass(frozen=True)
class TangentialPoint:
    """Base point with a tangential direction and scale.

    The direction must point into the path the transport actually takes; the
    scale may carry a formal name (`scale_symbol`) for symbolic assembly, but
    the oracle always uses the numeric `scale`.
    """

    base: Fraction
    direction: Fraction = Fraction(1)
    scale: Fraction = Fraction(1)
    scale_symbol: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "base", Fraction(self.base))
        object.__setattr__(self, "direction", Fraction(self.direction))
        object.__setattr__(self, "scale", Fraction(self.scale))
        if self.direction == 0:
            raise PreconditionError("tangential direction must be nonzero")
        if self.scale <= 0:
            raise PreconditionError("tangential scale must be positive")


@dataclass(frozen=True)
class KZConnection:
    """Finite singular points with residue series; the residue at infinity is
    implied (sum over all points is 0) unless given explicitly under `INF`."""

    residues: Mapping[object, NCSeries]
    trunc: int
    letters: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        res: dict[object, NCSeries] = {}
        letters = None
        for p, x in self.residues.items():
            key = INF if p == INF else Fraction(p)
            if letters is None:
                letters = x.letters
            elif x.letters != letters:
                raise PreconditionError("all residues must share one alphabet")
            if not _zero_constant(x):
                raise PreconditionError(f"residue at {key} must have zero constant term")
            res[key] = x.truncate(self.trunc)
        if letters is None:
            raise PreconditionError("a connection needs at least one residue")
        object.__setattr__(self, "residues", res)
        object.__setattr__(self, "letters", letters)
        if INF in res:
            total = None
            for x in res.values():
                total = x if total is None else total + x
            if not total.is_zero():
                raise PreconditionError("residues (including infinity) must sum to zero")

    def finite_points(self) -> list[Fraction]:
        return sorted(p for p in self.residues if p != INF)

    def residue_at_infinity(self) -> NCSeries:
        if INF in self.residues:
            return self.residues[INF]
        total = None
        for p, x in self.residues.items():
            total = x if total is None else total + x
        return -total


def _zero_constant(x: NCSeries) -> bool:
    c = x.constant_term()
    try:
        return bool(c == 0)
    except TypeError:
        return False


def associator_connection(N: int) -> KZConnection:
    """Residues x0 at 0 and -x1 at 1 under the dz/z, dz/(1-z) dictionary."""
    one = Fraction(1)
    x0 = NCSeries.letter(KZ_LETTERS, N, one, X0)
    x1 = NCSeries.letter(KZ_LETTERS, N, one, X1)
    return KZConnection({Fraction(0): x0, Fraction(1): -x1}, N)


def drinfeld_associator(N: int) -> NCSeries:
    """Regularized transport from the unit tangent at 0 to the inward tangent at 1."""
    coeffs = {(): PeriodElem.one()}
    words = [()]
    for _ in range(N):
        words = [w + (l,) for w in words for l in KZ_LETTERS]
        for w in words:
            val = shuffle_regularize(w)
            if val:
                coeffs[w] = val
    return NCSeries(KZ_LETTERS, N, PeriodElem.one(), coeffs)


def fusing_connection_matrix(X: NCSeries, Y: NCSeries, N: int) -> NCSeries:
    """Substitute X for x0 and Y for x1 in the associator."""
    for arg, name in ((X, "X"), (Y, "Y")):
        if not _zero_constant(arg):
            raise PreconditionError(f"{name} must have zero constant term (weight >= 1)")
    images = {X0: _over_period_ring(X).truncate(N), X1: _over_period_ring(Y).truncate(N)}
    return substitute_letters(drinfeld_associator(N), images)


def rotation_monodromy(X: NCSeries, k: int, N: int) -> NCSeries:
    """nc_exp(k * i*pi * X) over the period ring."""
    if not _zero_constant(X):
        raise PreconditionError("rotation argument must have zero constant term")
    lifted = _over_period_ring(X).truncate(N)
    return nc_exp(lifted.scale(PeriodElem.ipi() * k))


def _over_period_ring(x: NCSeries) -> NCSeries:
    if isinstance(x.one, PeriodElem):
        return x
    return x.map_coefficients(lambda c: PeriodElem.from_rational(c), one=PeriodElem.one())


# ---------------------------------------------------------------------------
# Numeric oracle.
# ---------------------------------------------------------------------------


def numeric_transport_oracle(conn: KZConnection, frm, to, N: int, precision: int) -> NCSeries:
    """Transport series along the straight segment, with tangential
    regularization at singular endpoints; coefficients are arbitrary-precision
    numbers certified by a two-resolution agreement check."""
    frm = _as_tangential(frm, toward=to)
    to = _as_tangential(to, toward=frm)
    if frm.base == to.base:
        raise PreconditionError("degenerate transport path")
    sings = conn.finite_points()
    lo, hi = min(frm.base, to.base), max(frm.base, to.base)
    for p in sings:
        if lo < p < hi:
            raise PreconditionError(f"path passes through the singular point {p}")
    dps = precision + 18
    with mp.workdps(dps):
        coarse = _transport(conn, frm, to, N, dps, refine=False)
        fine = _transport(conn, frm, to, N, dps, refine=True)
        tol = mp.mpf(10) ** (-(precision + 2))
        for w in set(coarse.coeffs) | set(fine.coeffs):
            if abs(coarse.coefficient(w) - fine.coefficient(w)) > tol:
                raise NumericBudgetError(
                    f"transport resolutions disagree at word {w}; raise precision budget")
        return fine


def _as_tangential(x, toward) -> TangentialPoint:
    if isinstance(x, TangentialPoint):
        return x
    base = Fraction(x)
    other = toward.base if isinstance(toward, TangentialPoint) else Fraction(toward)
    direction = Fraction(1) if other >= base else Fraction(-1)
    return TangentialPoint(base=base, direction=direction)


def _transport(conn: KZConnection, frm: TangentialPoint, to: TangentialPoint,
               N: int, dps: int, refine: bool) -> NCSeries:
    letters = conn.letters
    one = mp.mpf(1)
    numeric_res = {p: _to_numeric(x, N, one) for p, x in conn.residues.items() if p != INF}
    sings = sorted(numeric_res)
    eps_target = mp.mpf(10) ** (-(dps - 4))
    nodes = int((dps + 10) * mp.mpf("1.15") / mp.mpf("0.7656")) + 1
    if refine:
        nodes = nodes + nodes // 4 + 10

    factors: list[NCSeries] = []
    z1, z2 = frm.base, to.base
    path_sign = 1 if to.base > frm.base else -1

    if frm.base in numeric_res:
        u_sign = Fraction(path_sign) / (frm.direction * frm.scale)
        if u_sign <= 0:
            raise PreconditionError("outgoing tangential direction must point into the path")
        radius = min(abs(frm.base - p) for p in sings if p != frm.base) if len(sings) > 1 else Fraction(1)
        delta = min(Fraction(radius, 3), abs(to.base - frm.base) / 2)
        z1 = frm.base + path_sign * delta
        X_a = numeric_res[frm.base]
        H = _endpoint_series(numeric_res, frm.base, mp.mpf(path_sign) * mp.mpf(delta.numerator) / delta.denominator,
                             N, letters, one, eps_target, refine)
        u1 = mp.mpf((z1 - frm.base).numerator) / (z1 - frm.base).denominator
        u1 = u1 / (mp.mpf(frm.direction.numerator) / frm.direction.denominator)
        u1 = u1 / (mp.mpf(frm.scale.numerator) / frm.scale.denominator)
        factors.append(nc_exp(X_a.scale(mp.log(u1))))
        factors.append(H)

    tail: list[NCSeries] = []
    if to.base in numeric_res:
        u_sign = Fraction(-path_sign) / (to.direction * to.scale)
        if u_sign <= 0:
            raise PreconditionError("incoming tangential direction must point into the path")
        radius = min(abs(to.base - p) for p in sings if p != to.base) if len(sings) > 1 else Fraction(1)
        delta = min(Fraction(radius, 3), abs(to.base - frm.base) / 2)
        z2 = to.base - path_sign * delta
        X_b = numeric_res[to.base]
        H = _endpoint_series(numeric_res, to.base, -mp.mpf(path_sign) * mp.mpf(delta.numerator) / delta.denominator,
                             N, letters, one, eps_target, refine)
        u2 = mp.mpf((z2 - to.base).numerator) / (z2 - to.base).denominator
        u2 = u2 / (mp.mpf(to.direction.numerator) / to.direction.denominator)
        u2 = u2 / (mp.mpf(to.scale.numerator) / to.scale.denominator)
        tail.append(nc_inverse(H))
        tail.append(nc_exp(X_b.scale(-mp.log(u2))))

    if z1 != z2:
        for left, right in _split_panels(z1, z2, sings):
            factors.append(_panel_transport(numeric_res, left, right, nodes, N, letters, one))
    factors.extend(tail)

    out = NCSeries.unit(letters, N, one)
    for f in factors:
        out = nc_multiply(out, f)
    return out


def _to_numeric(x: NCSeries, N: int, one) -> NCSeries:
    def conv(c):
        if isinstance(c, PeriodElem):
            c = c.as_rational()
        if isinstance(c, Fraction):
            return mp.mpf(c.numerator) / c.denominator
        if isinstance(c, int):
            return mp.mpf(c)
        return mp.mpmathify(c)

    return x.truncate(N).map_coefficients(conv, one=one)


def _endpoint_series(numeric_res, p: Fraction, t0, N: int, letters, one,
                     eps_target, refine: bool) -> NCSeries:
    """Frobenius tail H with exp(X_p log u) . H solving the connection near p,
    evaluated at z = p + t0."""
    X_p = numeric_res[p]
    # W_m = -sum_{q != p} X_q / (q - p)^(m+1)
    others = [(numeric_res[q], mp.mpf((q - p).numerator) / (q - p).denominator)
              for q in numeric_res if q != p]

    def W(m: int) -> NCSeries:
        out = NCSeries.zero(letters, N, one)
        for Xq, d in others:
            out = out + Xq.scale(-(d ** (-(m + 1))))
        return out

    block = 16
    Kcap = 6000
    H_list = [NCSeries.unit(letters, N, one)]
    W_list: list[NCSeries] = []
    value = NCSeries.unit(letters, N, one)
    tpow = one
    recent: list[mp.mpf] = []
    while True:
        for _ in range(block):
            m = len(H_list)
            W_list.append(W(m - 1))
            rhs = NCSeries.zero(letters, N, one)
            for j in range(m):
                rhs = rhs + nc_multiply(H_list[j], W_list[m - 1 - j])
            Y = rhs.scale(one / m)
            for _ in range(N):
                Y = (rhs + nc_multiply(Y, X_p) - nc_multiply(X_p, Y)).scale(one / m)
            H_list.append(Y)
            tpow = tpow * t0
            term = Y.scale(tpow)
            value = value + term
            recent.append(max((abs(c) for c in term.coeffs.values()), default=mp.mpf(0)))
            recent = recent[-12:]
        if len(recent) == 12 and max(recent) < eps_target / 4:
            break
        if len(H_list) > Kcap:
            raise NumericBudgetError("endpoint series does not certify; singularities too close")
    if refine:
        # continue a little further so the two resolutions genuinely differ
        for _ in range(block):
            m = len(H_list)
            W_list.append(W(m - 1))
            rhs = NCSeries.zero(letters, N, one)
            for j in range(m):
                rhs = rhs + nc_multiply(H_list[j], W_list[m - 1 - j])
            Y = rhs.scale(one / m)
            for _ in range(N):
                Y = (rhs + nc_multiply(Y, X_p) - nc_multiply(X_p, Y)).scale(one / m)
            H_list.append(Y)
            tpow = tpow * t0
            value = value + Y.scale(tpow)
    return value


def _split_panels(z1: Fraction, z2: Fraction, sings: Sequence[Fraction]) -> list[tuple[Fraction, Fraction]]:
    out: list[tuple[Fraction, Fraction]] = []

    def rec(a: Fraction, b: Fraction, depth: int):
        if depth > 64:
            raise NumericBudgetError("panel subdivision exploded; singularity on the path?")
        c = (a + b) / 2
        h = abs(b - a) / 2
        dmin = min((abs(c - s) for s in sings), default=None)
        if dmin is None or dmin >= 3 * h:
            out.append((a, b))
            return
        rec(a, c, depth + 1)
        rec(c, b, depth + 1)

    rec(z1, z2, 0)
    return out


_CHEB_CACHE: dict[tuple[int, int], tuple[list[list[mp.mpf]], list[list[mp.mpf]], list[mp.mpf]]] = {}


def _cheb_matrices(n: int) -> tuple[list[list[mp.mpf]], list[list[mp.mpf]], list[mp.mpf]]:
    """(analysis matrix D: values -> coefficients, synthesis matrix V with n+2
    columns: coefficients -> values, Lobatto nodes u_j descending)."""
    key = (n, mp.mp.dps)
    hit = _CHEB_CACHE.get(key)
    if hit is not None:
        return hit
    nodes = [mp.cospi(mp.mpf(j) / n) for j in range(n + 1)]
    cos = [[mp.cospi(mp.mpf(j * k % (2 * n)) / n) for k in range(n + 2)] for j in range(n + 1)]
    D = []
    for k in range(n + 1):
        sigma = mp.mpf(1) / 2 if k in (0, n) else mp.mpf(1)
        row = []
        for j in range(n + 1):
            w = mp.mpf(1) / 2 if j in (0, n) else mp.mpf(1)
            row.append(2 * sigma * w * cos[j][k] / n)
        D.append(row)
    V = [[cos[j][k] for k in range(n + 2)] for j in range(n + 1)]
    _CHEB_CACHE[key] = (D, V, nodes)
    return D, V, nodes


def _panel_transport(numeric_res, left: Fraction, right: Fraction, n: int,
                     N: int, letters, one) -> NCSeries:
    """Transport of the naive (unregularized) system across one panel."""
    D, V, nodes = _cheb_matrices(n)
    mid = mp.mpf((left + right).numerator) / (left + right).denominator / 2
    half = (mp.mpf((right - left).numerator) / (right - left).denominator) / 2
    zs = [mid + half * u for u in nodes]
    # pole factors g_p(z) on the nodes
    gs = {}
    for p, Xp in numeric_res.items():
        pv = mp.mpf(p.numerator) / p.denominator
        gs[p] = [1 / (z - pv) for z in zs]
    suffixes = {p: [(w, c) for w, c in Xp.coeffs.items()] for p, Xp in numeric_res.items()}

    values: dict[tuple[str, ...], list[mp.mpf]] = {(): [one] * (n + 1)}
    coeff_at_end: dict[tuple[str, ...], mp.mpf] = {(): one}
    for weight in range(1, N + 1):
        cands = set()
        for sufs in suffixes.values():
            for suf, _c in sufs:
                ls = len(suf)
                if 0 < ls <= weight:
                    for head in values:
                        if len(head) == weight - ls:
                            cands.add(head + suf)
        for v in sorted(cands):
            # integrand collects every split v = head . residue-word
            integrand = [mp.mpf(0)] * (n + 1)
            for q, sufs_q in suffixes.items():
                gq = gs[q]
                for suf_q, cq in sufs_q:
                    ls = len(suf_q)
                    if ls == 0 or ls > len(v) or v[-ls:] != suf_q:
                        continue
                    hv = values.get(v[:-ls])
                    if hv is None:
                        continue
                    for j in range(n + 1):
                        integrand[j] += cq * hv[j] * gq[j]
            a = [sum(D[k][j] * integrand[j] for j in range(n + 1)) for k in range(n + 1)]
            a += [mp.mpf(0), mp.mpf(0)]
            b = [mp.mpf(0)] * (n + 2)
            b[1] = half * (2 * a[0] - a[2]) / 2
            for k in range(2, n + 2):
                b[k] = half * (a[k - 1] - a[k + 1]) / (2 * k)
            # path enters the panel at u = -1: fix b[0] so the primitive vanishes there
            b[0] = -sum(b[k] * (-1) ** k for k in range(1, n + 2))
            vals = [sum(V[j][k] * b[k] for k in range(n + 2)) for j in range(n + 1)]
            values[v] = vals
            coeff_at_end[v] = vals[0]
    return NCSeries(letters, N, one, coeff_at_end)
