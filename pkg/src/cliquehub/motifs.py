"""Motifs, weighted graphs, independence polynomials and homomorphism densities.

The homomorphism density of a motif F in a weighted graph X at scale s is

    t(F, X/s) = n^{-v(F)} * sum over all maps phi: V(F) -> [n] of
                prod over edges {u,w} of F of (X[phi(u), phi(w)] / s)

Maps are not required to be injective; the zero diagonal of X kills any map
that collapses an edge.  Three engines compute the underlying weighted
homomorphism sum: closed-form fast paths (cycles via traces, stars via row
sums, cliques via bitset backtracking on binary graphs), generic recursive
backtracking, and exhaustive tensor contraction kept as a reference oracle.
"""

from __future__ import annotations

import itertools
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, DomainError

GENERIC_MAX_VERTICES = 8
GENERIC_MAX_MAPS = 1e10
EXHAUSTIVE_MAX_MAPS = 1e8


@dataclass(frozen=True)
class Motif:
    """A small simple graph used as a counting pattern."""

    name: str
    vertices: int
    edges: tuple

    def __post_init__(self):
        if self.vertices < 1:
            raise DomainError("motif needs at least one vertex")
        seen = set()
        for e in self.edges:
            if len(e) != 2:
                raise DomainError("edges must be pairs")
            u, w = e
            if not (0 <= u < w < self.vertices):
                raise DomainError("edge endpoints must satisfy 0 <= u < w < vertices")
            if (u, w) in seen:
                raise DomainError("duplicate edge %s" % str(e))
            seen.add((u, w))

    @property
    def edge_count(self):
        return len(self.edges)

    @property
    def degrees(self):
        deg = [0] * self.vertices
        for u, w in self.edges:
            deg[u] += 1
            deg[w] += 1
        return tuple(deg)

    @property
    def max_degree(self):
        return max(self.degrees) if self.edges else 0

    @property
    def is_regular(self):
        deg = self.degrees
        return len(set(deg)) == 1

    @property
    def max_pair_degree_half(self):
        """Half the largest degree sum over the edges of the motif."""
        if not self.edges:
            return 0.0
        deg = self.degrees
        return max(deg[u] + deg[w] for u, w in self.edges) / 2.0

    def star_core(self):
        """Induced subgraph on the maximum-degree vertices."""
        deg = self.degrees
        dmax = self.max_degree
        keep = [v for v in range(self.vertices) if deg[v] == dmax]
        remap = {v: i for i, v in enumerate(keep)}
        edges = tuple(
            sorted(
                (remap[u], remap[w])
                for u, w in self.edges
                if u in remap and w in remap
            )
        )
        return Motif(self.name + "*", len(keep), edges)

    def adjacency(self):
        a = np.zeros((self.vertices, self.vertices), dtype=np.int64)
        for u, w in self.edges:
            a[u, w] = a[w, u] = 1
        return a

    def is_connected(self):
        if self.vertices == 1:
            return True
        adj = [set() for _ in range(self.vertices)]
        for u, w in self.edges:
            adj[u].add(w)
            adj[w].add(u)
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.vertices

    def to_json_dict(self):
        return {"name": self.name, "vertices": self.vertices,
                "edges": [list(e) for e in self.edges]}

    @staticmethod
    def from_json_dict(d):
        try:
            edges = tuple(sorted(tuple(sorted(e)) for e in d["edges"]))
            return Motif(str(d["name"]), int(d["vertices"]), edges)
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError("bad motif json: %s" % exc)


def cycle_motif(length):
    if length < 3:
        raise DomainError("cycles need length >= 3")
    edges = tuple(sorted(tuple(sorted((i, (i + 1) % length))) for i in range(length)))
    return Motif("C%d" % length, length, edges)


def star_motif(leaves):
    if leaves < 1:
        raise DomainError("stars need at least one leaf")
    return Motif("K1%d" % leaves, leaves + 1, tuple((0, i) for i in range(1, leaves + 1)))


def clique_motif(size):
    if size < 2:
        raise DomainError("cliques need size >= 2")
    return Motif("K%d" % size, size, tuple(itertools.combinations(range(size), 2)))


def motif_from_name(name):
    """Resolve built-in names: C<l> cycles, K1<k> stars, K<r> cliques."""
    if name.startswith("C") and name[1:].isdigit():
        return cycle_motif(int(name[1:]))
    if name.startswith("K1") and len(name) > 2 and name[2:].isdigit():
        return star_motif(int(name[2:]))
    if name.startswith("K") and name[1:].isdigit():
        return clique_motif(int(name[1:]))
    raise DomainError("unknown motif name %r" % name)


def resolve_motif(spec):
    """Accept a Motif, a built-in name, or a path to a motif json file."""
    if isinstance(spec, Motif):
        return spec
    if isinstance(spec, dict):
        return Motif.from_json_dict(spec)
    try:
        return motif_from_name(spec)
    except DomainError:
        pass
    try:
        with open(spec) as fh:
            return Motif.from_json_dict(json.load(fh))
    except OSError:
        raise DomainError("cannot resolve motif %r" % spec)


# ---------------------------------------------------------------------------
# independence polynomial


class IndepPoly:
    """P(x) = 1 + sum over nonempty independent sets U of x^|U|.

    Strictly increasing on x >= 0, so the inverse on [1, inf) is well defined.
    """

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs[0] != 1.0:
            raise DomainError("independence polynomial must have constant term 1")
        # plain-float copies keep the scalar Horner loops off numpy scalars
        self._rev = [float(c) for c in self.coeffs[::-1]]
        self._rev_deriv = [float(k * self.coeffs[k])
                           for k in range(len(self.coeffs) - 1, 0, -1)]

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x):
        # Horner; plain arithmetic for scalars, numpy for arrays
        if isinstance(x, (float, int)):
            y = 0.0
            for c in self._rev:
                y = y * x + c
            return y
        y = np.zeros_like(np.asarray(x, dtype=float))
        for c in self._rev:
            y = y * x + c
        return y if y.shape else float(y)

    def deriv(self, x):
        y = 0.0
        for c in self._rev_deriv:
            y = y * x + c
        return y

    def inverse(self, y):
        """Solve P(b) = y for b >= 0; requires y >= 1."""
        y = float(y)
        if y < 1.0 - 1e-12:
            raise DomainError("inverse of independence polynomial needs y >= 1")
        if y <= 1.0:
            return 0.0
        hi = 1.0
        while self(hi) < y:
            hi *= 2.0
            if hi > 1e30:
                raise DomainError("inverse bracket failed")
        lo = 0.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if self(mid) < y:
                lo = mid
            else:
                hi = mid
        b = 0.5 * (lo + hi)
        # Newton polish
        for _ in range(6):
            d = self.deriv(b)
            if d <= 0:
                break
            b = max(0.0, b - (self(b) - y) / d)
        if abs(self(b) - y) > 1e-12 * max(1.0, abs(y)):
            raise DomainError("independence polynomial inverse did not converge")
        return b


def indep_poly(motif):
    """Independence polynomial of a motif by subset enumeration."""
    v = motif.vertices
    if v > 24:
        raise CapabilityError("independence polynomial limited to 24 vertices")
    nbr = [0] * v
    for u, w in motif.edges:
        nbr[u] |= 1 << w
        nbr[w] |= 1 << u
    counts = [0] * (v + 1)
    counts[0] = 1

    def grow(mask, last, size):
        counts[size] += 1
        for nxt in range(last + 1, v):
            if not (mask & nbr[nxt]) and not (mask >> nxt) & 1:
                grow(mask | (1 << nxt), nxt, size + 1)

    for start in range(v):
        grow(1 << start, start, 1)
    while counts and counts[-1] == 0:
        counts.pop()
    return IndepPoly(counts)


# ---------------------------------------------------------------------------
# weighted graph container


class WeightTable:
    """Symmetric [0,1] weight matrix with zero diagonal."""

    def __init__(self, matrix, binary=None, validate=True):
        x = np.array(matrix, dtype=np.float64)
        if validate:
            if x.ndim != 2 or x.shape[0] != x.shape[1]:
                raise DomainError("weight table must be square")
            if x.shape[0] > 0:
                if np.max(np.abs(x - x.T)) > 1e-12:
                    raise DomainError("weight table must be symmetric")
                if np.max(np.abs(np.diag(x))) > 1e-12:
                    raise DomainError("weight table diagonal must be zero")
                if x.min() < -1e-12 or x.max() > 1.0 + 1e-12:
                    raise DomainError("weights must lie in [0, 1]")
            x = np.clip(x, 0.0, 1.0)
            np.fill_diagonal(x, 0.0)
        self.matrix = x
        if binary is None:
            binary = bool(np.all((x == 0.0) | (x == 1.0)))
        self.binary = binary

    @property
    def n(self):
        return self.matrix.shape[0]

    def edge_total(self):
        return float(self.matrix.sum() / 2.0)

    # -- wire formats ------------------------------------------------------
    # binary: u32 little-endian vertex count, then the strict lower triangle
    # row-major ((1,0), (2,0), (2,1), (3,0), ...) as little-endian float64.

    def to_bytes(self):
        n = self.n
        tri = self.matrix[np.tril_indices(n, k=-1)]
        return struct.pack("<I", n) + tri.astype("<f8").tobytes()

    @staticmethod
    def from_bytes(blob):
        if len(blob) < 4:
            raise DomainError("weight table blob too short")
        (n,) = struct.unpack("<I", blob[:4])
        want = n * (n - 1) // 2
        body = np.frombuffer(blob[4:], dtype="<f8")
        if body.size != want:
            raise DomainError("weight table blob has %d entries, expected %d"
                              % (body.size, want))
        x = np.zeros((n, n))
        x[np.tril_indices(n, k=-1)] = body
        x = x + x.T
        return WeightTable(x)

    def to_json_dict(self):
        tri = self.matrix[np.tril_indices(self.n, k=-1)]
        return {"n": self.n, "triangle": [float(v) for v in tri]}

    @staticmethod
    def from_json_dict(d):
        try:
            n = int(d["n"])
            tri = np.asarray(d["triangle"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError("bad weight table json: %s" % exc)
        if tri.size != n * (n - 1) // 2:
            raise DomainError("triangle length does not match n")
        x = np.zeros((n, n))
        x[np.tril_indices(n, k=-1)] = tri
        return WeightTable(x + x.T)


def er_table(n, p, rng):
    """Erdos-Renyi adjacency matrix as a WeightTable."""
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    x = (upper & (rng.random((n, n)) < p)).astype(np.float64)
    x = x + x.T
    return WeightTable(x, binary=True, validate=False)


# ---------------------------------------------------------------------------
# homomorphism engines (weighted sums; densities divide by s^e * n^v)


def _as_matrix(table):
    if isinstance(table, WeightTable):
        return table.matrix
    return np.asarray(table, dtype=np.float64)


def _split_isolated(motif):
    deg = motif.degrees
    live = [v for v in range(motif.vertices) if deg[v] > 0]
    remap = {v: i for i, v in enumerate(live)}
    edges = tuple(sorted((remap[u], remap[w]) for u, w in motif.edges))
    iso = motif.vertices - len(live)
    return Motif(motif.name + "'", max(len(live), 1), edges) if live else None, iso


def _cycle_length(motif):
    if motif.vertices < 3 or motif.edge_count != motif.vertices:
        return None
    if motif.degrees != tuple([2] * motif.vertices) or not motif.is_connected():
        return None
    return motif.vertices


def _star_leaves(motif):
    v = motif.vertices
    if v < 2 or motif.edge_count != v - 1:
        return None
    deg = sorted(motif.degrees)
    if deg != [1] * (v - 1) + [v - 1]:
        return None
    return v - 1


def _clique_size(motif):
    v = motif.vertices
    if motif.edge_count != v * (v - 1) // 2 or v < 2:
        return None
    return v


def hom_sum_fast(motif, x):
    """Closed-form weighted homomorphism sum, or None if no fast path fits."""
    core, iso = _split_isolated(motif)
    n = x.shape[0]
    if core is None:
        return float(n) ** motif.vertices
    scale_iso = float(n) ** iso

    ell = _cycle_length(core)
    if ell is not None:
        if np.all((x == 0.0) | (x == 1.0)):
            # integer matrix powers stay exact in float64, so binary
            # inputs get integer counts with no eigenvalue roundoff
            power = x
            for _ in range(ell - 1):
                power = power @ x
            return scale_iso * float(np.trace(power))
        w = np.linalg.eigvalsh(x)
        return scale_iso * float(np.sum(w ** ell))

    k = _star_leaves(core)
    if k is not None:
        r = x.sum(axis=1)
        return scale_iso * float(np.sum(r ** k))

    r = _clique_size(core)
    if r is not None and np.all((x == 0.0) | (x == 1.0)):
        masks = []
        for i in range(n):
            m = 0
            row = x[i]
            for j in range(n):
                if row[j] != 0.0:
                    m |= 1 << j
            masks.append(m)
        total = _count_cliques(masks, n, r)
        return scale_iso * float(total * math.factorial(r))

    return None


def _count_cliques(masks, n, r):
    """Number of unordered r-cliques via bitset intersection backtracking."""
    if r == 0:
        return 1
    count = 0

    def rec(cand, depth):
        nonlocal count
        if depth == r:
            count += 1
            return
        c = cand
        while c:
            v = (c & -c).bit_length() - 1
            c &= c - 1
            rec(cand & masks[v] & ~((1 << (v + 1)) - 1), depth + 1)

    rec((1 << n) - 1, 0)
    return count


def hom_sum_generic(motif, x):
    """Recursive backtracking over vertex maps with zero-product pruning."""
    core, iso = _split_isolated(motif)
    n = x.shape[0]
    if core is None:
        return float(n) ** motif.vertices
    v = core.vertices
    if v > GENERIC_MAX_VERTICES:
        raise CapabilityError("generic engine limited to %d motif vertices"
                              % GENERIC_MAX_VERTICES)
    if float(n) ** v > GENERIC_MAX_MAPS:
        raise CapabilityError("generic engine limited to %g maps" % GENERIC_MAX_MAPS)

    # order motif vertices so each new one touches as many placed ones as possible
    deg = core.degrees
    adj = [set() for _ in range(v)]
    for a, b in core.edges:
        adj[a].add(b)
        adj[b].add(a)
    order = []
    placed = set()
    while len(order) < v:
        best = max(
            (u for u in range(v) if u not in placed),
            key=lambda u: (len(adj[u] & placed), deg[u]),
        )
        order.append(best)
        placed.add(best)
    back = []  # for each position, neighbors already placed (as positions)
    pos = {u: i for i, u in enumerate(order)}
    for i, u in enumerate(order):
        back.append([pos[w] for w in adj[u] if pos[w] < i])

    total = 0.0
    images = [0] * v

    def rec(i, weight):
        nonlocal total
        if i == v:
            total += weight
            return
        prev = back[i]
        if not prev:
            # no placed neighbors: every target contributes weight once;
            # recurse per target only if later vertices depend on this one
            for t in range(n):
                images[i] = t
                rec(i + 1, weight)
            return
        col = x[images[prev[0]]]
        if len(prev) == 1:
            w_t = col
        else:
            w_t = col.copy()
            for q in prev[1:]:
                w_t = w_t * x[images[q]]
        nz = np.nonzero(w_t)[0]
        for t in nz:
            images[i] = int(t)
            rec(i + 1, weight * float(w_t[t]))

    rec(0, 1.0)
    return total * float(n) ** iso


def hom_sum_exhaustive(motif, x):
    """Reference oracle: full tensor contraction over all maps."""
    core, iso = _split_isolated(motif)
    n = x.shape[0]
    if core is None:
        return float(n) ** motif.vertices
    v = core.vertices
    if float(n) ** v > EXHAUSTIVE_MAX_MAPS:
        raise CapabilityError("exhaustive engine limited to %g maps"
                              % EXHAUSTIVE_MAX_MAPS)
    letters = "abcdefgh"
    subs = ",".join(letters[u] + letters[w] for u, w in core.edges)
    ops = [x] * core.edge_count
    total = float(np.einsum(subs + "->", *ops, optimize=True))
    return total * float(n) ** iso


def hom_sum(motif, table, engine="auto"):
    x = _as_matrix(table)
    if engine == "auto":
        fast = hom_sum_fast(motif, x)
        if fast is not None:
            return fast
        return hom_sum_generic(motif, x)
    if engine == "fast":
        fast = hom_sum_fast(motif, x)
        if fast is None:
            raise CapabilityError("no fast path for motif %s" % motif.name)
        return fast
    if engine == "generic":
        return hom_sum_generic(motif, x)
    if engine == "exhaustive":
        return hom_sum_exhaustive(motif, x)
    raise DomainError("unknown engine %r" % engine)


def hom_density(motif, table, scale=1.0, engine="auto"):
    """t(F, X/scale) for a WeightTable or plain symmetric matrix."""
    x = _as_matrix(table)
    n = x.shape[0]
    if n == 0:
        raise DomainError("empty graph")
    if scale <= 0:
        raise DomainError("scale must be positive")
    s = hom_sum(motif, x, engine=engine)
    return s / (scale ** motif.edge_count * float(n) ** motif.vertices)


# ---------------------------------------------------------------------------
# toggle deltas: change in the homomorphism sum when edge {i,j} goes 0 -> 1


def _trace_update_words(ell):
    """All gap sequences of cyclic words in {B,E}^ell with at least one E."""
    out = []
    for bits in range(1, 1 << ell):
        word = [(bits >> t) & 1 for t in range(ell)]
        first = word.index(1)
        word = word[first:] + word[:first]  # rotate to start with E
        gaps = []
        run = 0
        for b in word[1:]:
            if b:
                gaps.append(run)
                run = 0
            else:
                run += 1
        gaps.append(run)
        out.append(tuple(gaps))
    return out


_WORD_CACHE = {}


def _cycle_delta(ell, x, i, j):
    """tr((B+E)^ell) - tr(B^ell) with B = x minus edge ij, E the ij pair."""
    n = x.shape[0]
    b = x.copy()
    b[i, j] = b[j, i] = 0.0
    if ell not in _WORD_CACHE:
        _WORD_CACHE[ell] = _trace_update_words(ell)
    # powers of B applied to the two unit vectors
    cols = np.zeros((ell, n, 2))
    cols[0, i, 0] = 1.0
    cols[0, j, 1] = 1.0
    for a in range(1, ell):
        cols[a] = b @ cols[a - 1]
    w = np.empty((ell, 2, 2))
    for a in range(ell):
        w[a, 0, 0] = cols[a, j, 0]
        w[a, 0, 1] = cols[a, j, 1]
        w[a, 1, 0] = cols[a, i, 0]
        w[a, 1, 1] = cols[a, i, 1]
    total = 0.0
    for gaps in _WORD_CACHE[ell]:
        m = w[gaps[0]]
        for g in gaps[1:]:
            m = m @ w[g]
        total += m[0, 0] + m[1, 1]
    return float(total)


def hom_sum_delta(motif, table, i, j):
    """hom_sum with edge {i,j} present minus with it absent.

    The current value of the edge in `table` does not matter; the base graph
    is the table with that edge cleared.
    """
    x = _as_matrix(table)
    n = x.shape[0]
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise DomainError("bad edge (%d, %d)" % (i, j))
    core, iso = _split_isolated(motif)
    if core is None:
        return 0.0
    scale_iso = float(n) ** iso

    ell = _cycle_length(core)
    if ell is not None:
        return scale_iso * _cycle_delta(ell, x, i, j)

    k = _star_leaves(core)
    if k is not None:
        r = x.sum(axis=1)
        ri = r[i] - x[i, j]
        rj = r[j] - x[i, j]
        return scale_iso * float((ri + 1) ** k - ri ** k + (rj + 1) ** k - rj ** k)

    r = _clique_size(core)
    if r is not None and np.all((x == 0.0) | (x == 1.0)):
        common = np.nonzero((x[i] > 0) & (x[j] > 0))[0]
        common = common[(common != i) & (common != j)]
        if r == 2:
            inner = 1.0
        elif common.size == 0:
            inner = 0.0
        elif r == 3:
            inner = float(common.size)
        else:
            inner = hom_sum(clique_motif(r - 2), x[np.ix_(common, common)])
        return scale_iso * float(r * (r - 1) * inner)

    b0 = x.copy()
    b0[i, j] = b0[j, i] = 0.0
    b1 = b0.copy()
    b1[i, j] = b1[j, i] = 1.0
    return hom_sum(motif, b1) - hom_sum(motif, b0)


def hom_density_delta(motif, table, i, j, scale=1.0):
    x = _as_matrix(table)
    n = x.shape[0]
    return hom_sum_delta(motif, table, i, j) / (
        scale ** motif.edge_count * float(n) ** motif.vertices)


# ---------------------------------------------------------------------------
# gradients of the homomorphism sum

GRAD_MAX_OPS = 2.0e8


def _components(motif):
    """Connected components with vertices relabeled; isolated vertices dropped."""
    adj = {v: [] for v in range(motif.vertices)}
    for u, w in motif.edges:
        adj[u].append(w)
        adj[w].append(u)
    comps = []
    seen = set()
    for v0 in range(motif.vertices):
        if v0 in seen or not adj[v0]:
            continue
        stack = [v0]
        seen.add(v0)
        verts = []
        while stack:
            u = stack.pop()
            verts.append(u)
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        verts.sort()
        remap = {u: i for i, u in enumerate(verts)}
        edges = tuple(sorted((remap[u], remap[w]) for u, w in motif.edges
                             if u in remap and w in remap))
        comps.append(Motif("%s~%d" % (motif.name, len(comps)), len(verts), edges))
    return comps


def _pinned_clique_grad(x, r):
    # contraction over the r-2 free vertices of a clique with one edge pinned
    n = x.shape[0]
    letters = "abcdefgh"
    if r > len(letters):
        raise CapabilityError("gradient supports cliques up to 8 vertices")
    if float(n) ** r > GRAD_MAX_OPS:
        raise CapabilityError("gradient contraction exceeds the operation cap")
    free = letters[2:r]
    subs = []
    for u in free:
        subs.append("a" + u)
        subs.append("b" + u)
    for i in range(len(free)):
        for j in range(i + 1, len(free)):
            subs.append(free[i] + free[j])
    return np.einsum(",".join(subs) + "->ab", *([x] * len(subs)), optimize=True)


def _pinned_edge_grad(core, x):
    # sum of pinned-edge contractions over the motif's edges, both orientations
    n = x.shape[0]
    v = core.vertices
    letters = "abcdefgh"
    if v > len(letters):
        raise CapabilityError("gradient supports motifs up to 8 vertices")
    if core.edge_count * float(n) ** v > GRAD_MAX_OPS:
        raise CapabilityError("gradient contraction exceeds the operation cap")
    total = np.zeros((n, n))
    ones = np.ones(n)
    for u, w in core.edges:
        subs = [letters[a] + letters[b] for a, b in core.edges if (a, b) != (u, w)]
        lu, lw = letters[u], letters[w]
        present = set("".join(subs))
        out = "".join(c for c in (lu, lw) if c in present)
        # endpoints of degree one drop out of the remaining edges; broadcast them
        missing = [c for c in letters[:v] if c not in present and c not in (lu, lw)]
        factor = float(n) ** len(missing)
        if subs:
            d = np.einsum(",".join(subs) + "->" + out,
                          *([x] * len(subs)), optimize=True)
        else:
            d = np.float64(1.0)
        if out == lu + lw:
            block = np.asarray(d)
        elif out == lu:
            block = np.outer(d, ones)
        elif out == lw:
            block = np.outer(ones, d)
        else:
            block = np.full((n, n), float(d))
        total += factor * (block + block.T)
    return total


def _component_grad(comp, x):
    ell = _cycle_length(comp)
    if ell is not None:
        return 2.0 * ell * np.linalg.matrix_power(x, ell - 1)
    k = _star_leaves(comp)
    if k is not None:
        r = x.sum(axis=1)
        rk = r ** (k - 1) if k > 1 else np.ones_like(r)
        return float(k) * np.add.outer(rk, rk)
    r = _clique_size(comp)
    if r is not None and r >= 3:
        return float(r * (r - 1)) * _pinned_clique_grad(x, r)
    return _pinned_edge_grad(comp, x)


def hom_sum_grad(motif, table):
    """Gradient of hom_sum with respect to the unordered pair weights.

    Returns a symmetric zero-diagonal matrix G where G[i, j] is the derivative
    of hom_sum(motif, x) when x[i, j] and x[j, i] move together.  Disconnected
    motifs use the product rule across components; isolated vertices only
    contribute the usual n^iso factor.
    """
    x = _as_matrix(table)
    n = x.shape[0]
    core, iso = _split_isolated(motif)
    out = np.zeros((n, n))
    if core is None:
        return out
    scale = float(n) ** iso
    comps = _components(core)
    for idx, comp in enumerate(comps):
        rest = scale
        for jdx, other in enumerate(comps):
            if jdx != idx:
                rest *= hom_sum(other, x)
        out += rest * _component_grad(comp, x)
    np.fill_diagonal(out, 0.0)
    return out


def hom_density_grad(motif, table, scale=1.0):
    """Gradient of hom_density under the same pair-weight convention."""
    x = _as_matrix(table)
    n = x.shape[0]
    return hom_sum_grad(motif, x) / (
        scale ** motif.edge_count * float(n) ** motif.vertices)


# ---------------------------------------------------------------------------
# planar surrogate and rate normalization


def t_planar(motif, a, b):
    """T_F(a, b) = P_{F*}(b) + a^(v/2) * [F regular]."""
    if a < 0 or b < 0:
        raise DomainError("t_planar needs a, b >= 0")
    p = indep_poly(motif.star_core())
    val = p(b)
    if motif.edge_count > 0 and motif.is_regular:
        val += a ** (motif.vertices / 2.0)
    return float(val)


def rate(n, p, delta):
    """Gibbs tilt normalization n^2 p^delta log(1/p)."""
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    if n < 1:
        raise DomainError("n must be positive")
    return float(n) ** 2 * p ** delta * math.log(1.0 / p)


@dataclass
class MotifFamily:
    """An ordered family of motifs sharing a maximum degree."""

    motifs: tuple
    delta: int
    warnings: list = field(default_factory=list)


def validate_family(motifs, allow_mixed_max_degree=False):
    motifs = tuple(resolve_motif(m) for m in motifs)
    if not motifs:
        raise DomainError("family must contain at least one motif")
    for m in motifs:
        if m.edge_count == 0:
            raise DomainError("motif %s has no edges" % m.name)
    degs = sorted({m.max_degree for m in motifs})
    warnings = []
    if len(degs) > 1:
        if not allow_mixed_max_degree:
            raise DomainError(
                "family mixes maximum degrees %s; pass allow_mixed_max_degree"
                % degs)
        warnings.append(
            "family mixes maximum degrees %s; using the largest" % degs)
    return MotifFamily(motifs, max(degs), warnings)
