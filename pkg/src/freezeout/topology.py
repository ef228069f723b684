"""Chimera hardware graphs with broken-qubit masks.

Site indexing is row-major over cells; inside a cell, sites 0-3 form the
left shore and 4-7 the right shore::

    site = 8 * (row * L + col) + k

Left sites couple vertically (same ``k``, cell below), right sites couple
horizontally (same ``k``, cell to the right).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

SHORE = 4
CELL = 2 * SHORE
MAX_L = 64
# Grid size of the bundled intersected graph.
FULL_L = 8


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    L: int
    broken: frozenset[int]
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    shore: int = field(default=SHORE)

    @property
    def n_sites(self) -> int:
        return CELL * self.L * self.L

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @cached_property
    def position(self) -> dict[int, int]:
        """Map site index -> position in ``nodes``."""
        return {site: k for k, site in enumerate(self.nodes)}

    @cached_property
    def _adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {i: [] for i in self.nodes}
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return {i: tuple(sorted(v)) for i, v in adj.items()}

    def cell_of(self, site: int) -> tuple[int, int, int]:
        """Return ``(row, col, k)`` for a site."""
        cell, k = divmod(site, CELL)
        row, col = divmod(cell, self.L)
        return row, col, k


def _site(L: int, row: int, col: int, k: int) -> int:
    return CELL * (row * L + col) + k


def build_chimera(L: int, broken: Iterable[int] = ()) -> Topology:
    """Build an ``L x L`` Chimera graph with ``broken`` sites removed."""
    if not isinstance(L, (int, np.integer)) or not 1 <= L <= MAX_L:
        raise TopologyError(f"grid size L={L!r} outside 1..{MAX_L}")
    L = int(L)
    n_sites = CELL * L * L
    broken = frozenset(int(b) for b in broken)
    bad = [b for b in broken if not 0 <= b < n_sites]
    if bad:
        raise TopologyError(f"broken sites out of range 0..{n_sites - 1}: {sorted(bad)}")

    edges = []
    for row in range(L):
        for col in range(L):
            for a in range(SHORE):
                for b in range(SHORE):
                    edges.append((_site(L, row, col, a), _site(L, row, col, SHORE + b)))
                if row + 1 < L:
                    edges.append((_site(L, row, col, a), _site(L, row + 1, col, a)))
                if col + 1 < L:
                    edges.append((_site(L, row, col, SHORE + a), _site(L, row, col + 1, SHORE + a)))
    edges = sorted((min(i, j), max(i, j)) for i, j in edges if i not in broken and j not in broken)
    nodes = tuple(i for i in range(n_sites) if i not in broken)
    return Topology(L=L, broken=broken, nodes=nodes, edges=tuple(edges))


def neighbors(t: Topology, i: int) -> list[int]:
    """Live sites adjacent to live site ``i``, ascending."""
    if not 0 <= i < t.n_sites:
        raise TopologyError(f"site {i} out of range")
    if i in t.broken:
        raise TopologyError(f"site {i} is broken")
    return list(t._adjacency[i])


def read_mask(path: str | Path) -> set[int]:
    """Read a broken-site mask: one index per line, ``#`` starts a comment."""
    sites = set()
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            sites.add(int(line))
    return sites


def write_mask(path: str | Path, sites: Iterable[int], comment: str | None = None) -> None:
    lines = [f"# {comment}"] if comment else []
    lines += [str(s) for s in sorted(sites)]
    Path(path).write_text("\n".join(lines) + "\n")


def bundled_mask() -> set[int]:
    """The 11-site synthetic mask for the intersected 8x8 graph."""
    ref = resources.files("freezeout") / "data" / "broken_mask_L8.txt"
    with resources.as_file(ref) as p:
        return read_mask(p)


def restrict_mask(mask: Iterable[int], L: int, full_L: int = FULL_L) -> set[int]:
    """Translate a mask from the ``full_L`` frame to the top-left ``L x L`` block."""
    out = set()
    for site in mask:
        cell, k = divmod(site, CELL)
        row, col = divmod(cell, full_L)
        if row < L and col < L:
            out.add(_site(L, row, col, k))
    return out


def intersected_chimera(L: int = FULL_L) -> Topology:
    """Top-left ``L x L`` block of the bundled intersected graph."""
    if not 1 <= L <= FULL_L:
        raise TopologyError(f"intersected graph only defined for L in 1..{FULL_L}")
    return build_chimera(L, restrict_mask(bundled_mask(), L))


def csr_adjacency(t: Topology, weights: dict[tuple[int, int], float] | None = None):
    """Position-indexed CSR adjacency ``(indptr, indices, data)``.

    With ``weights`` only the keyed edges are kept (their values become ``data``);
    otherwise every topology edge is kept with weight 1.
    """
    pos = t.position
    n = t.n_nodes
    items = weights.items() if weights is not None else ((e, 1) for e in t.edges)
    rows: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (i, j), w in items:
        a, b = pos[i], pos[j]
        rows[a].append((b, w))
        rows[b].append((a, w))
    indptr = np.zeros(n + 1, dtype=np.int64)
    for k, r in enumerate(rows):
        r.sort()
        indptr[k + 1] = indptr[k] + len(r)
    indices = np.fromiter((b for r in rows for b, _ in r), dtype=np.int64, count=int(indptr[-1]))
    data = np.array([w for r in rows for _, w in r])
    return indptr, indices, data
