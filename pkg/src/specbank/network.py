"""Frequency-gridded multiport S-matrix algebra.

Single-connection cascading, chain reduction with deterministic port
ordering, validation predicates, and a brute-force linear-system solver
used as the independent oracle for cascade correctness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, SingularConnectionError, SingularSystemError
from .grid import FrequencyGrid

SINGULAR_CONNECTION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SMatrix:
    """Complex n-port scattering matrix on a frequency grid.

    ``entries`` has shape (n_freq, n_ports, n_ports) and is read-only.
    All ports share one reference-impedance convention; cascading joins
    only like-referenced ports (impedance steps are explicit two-ports
    built elsewhere, never implicit here).
    """

    grid: FrequencyGrid
    entries: np.ndarray = field(repr=False)
    port_labels: tuple[str, ...] = ()

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 3 or e.shape[1] != e.shape[2]:
            raise ValueError("entries must have shape (n_freq, n, n)")
        if e.shape[0] != len(self.grid):
            raise ValueError("entries first axis must match the grid length")
        if not np.all(np.isfinite(e)):
            raise ValueError("S-matrix entries must be finite")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        labels = tuple(self.port_labels) or tuple(f"p{i}" for i in range(e.shape[1]))
        if len(labels) != e.shape[1]:
            raise ValueError("port_labels length must equal the port count")
        object.__setattr__(self, "port_labels", labels)

    @property
    def n_ports(self) -> int:
        return self.entries.shape[1]

    def s(self, i: int, j: int) -> np.ndarray:
        """S_ij over the grid (0-based ports)."""
        return self.entries[:, i, j]

    def permuted(self, order) -> "SMatrix":
        """Reorder ports; ``order[k]`` is the old index of new port k."""
        order = list(order)
        if sorted(order) != list(range(self.n_ports)):
            raise ValueError("order must be a permutation of the ports")
        idx = np.asarray(order)
        return SMatrix(
            grid=self.grid,
            entries=self.entries[:, idx][:, :, idx],
            port_labels=tuple(self.port_labels[i] for i in order),
        )

    def relabeled(self, labels) -> "SMatrix":
        return SMatrix(grid=self.grid, entries=self.entries, port_labels=tuple(labels))

    def __repr__(self) -> str:
        return f"SMatrix({self.n_ports}-port, {len(self.grid)} freqs, ports={self.port_labels})"


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    tol: float
    passed: bool
    worst_frequency_hz: float
    worst_deviation: float
    deviations: np.ndarray = field(repr=False)


def validate(s: SMatrix, kind: str, tol: float = 1e-9) -> ValidationReport:
    """Check an S-matrix property at every grid point.

    reciprocal: max |S - S^T| <= tol
    passive:    max singular value <= 1 + tol (deviation = sigma_max - 1)
    lossless:   max |S^H S - I| <= tol
    """
    e = s.entries
    if kind == "reciprocal":
        dev = np.max(np.abs(e - np.transpose(e, (0, 2, 1))), axis=(1, 2))
    elif kind == "passive":
        dev = np.linalg.svd(e, compute_uv=False)[:, 0] - 1.0
    elif kind == "lossless":
        eye = np.eye(s.n_ports)
        dev = np.max(np.abs(np.conj(np.transpose(e, (0, 2, 1))) @ e - eye), axis=(1, 2))
    else:
        raise ValueError(f"unknown validation kind {kind!r}")
    worst = int(np.argmax(dev))
    return ValidationReport(
        kind=kind,
        tol=tol,
        passed=bool(dev[worst] <= tol),
        worst_frequency_hz=float(s.grid.points[worst]),
        worst_deviation=float(dev[worst]),
        deviations=dev,
    )


def _require_same_grid(a: SMatrix, b: SMatrix) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(
            "networks are on different frequency grids; resample explicitly first"
        )


def cascade_pair(a: SMatrix, b: SMatrix, port_a: int, port_b: int,
                 singular_tol: float = SINGULAR_CONNECTION_TOL) -> SMatrix:
    """Join port_a of ``a`` to port_b of ``b``.

    With p = port_a, q = port_b, e the remaining ports of each network and
    D = 1 - A_pp B_qq per frequency:

        S_AA = A_ee + A_ep B_qq A_pe / D      S_AB = A_ep B_qe / D
        S_BA = B_eq A_pe / D                  S_BB = B_ee + B_eq A_pp B_qe / D

    Output ports are a's remaining ports followed by b's remaining ports.
    Both ports must share the same reference impedance.
    """
    _require_same_grid(a, b)
    if not (0 <= port_a < a.n_ports and 0 <= port_b < b.n_ports):
        raise ValueError("connection port out of range")

    ea = [i for i in range(a.n_ports) if i != port_a]
    eb = [i for i in range(b.n_ports) if i != port_b]
    A, B = a.entries, b.entries
    app = A[:, port_a, port_a]
    bqq = B[:, port_b, port_b]
    d = 1.0 - app * bqq
    small = np.abs(d) < singular_tol
    if np.any(small):
        k = int(np.flatnonzero(small)[0])
        raise SingularConnectionError(float(a.grid.points[k]), float(np.abs(d[k])), singular_tol)

    a_ep = A[:, ea, port_a]
    a_pe = A[:, port_a, ea]
    b_eq = B[:, eb, port_b]
    b_qe = B[:, port_b, eb]
    dinv = 1.0 / d

    na, nb = len(ea), len(eb)
    out = np.empty((len(a.grid), na + nb, na + nb), dtype=complex)
    out[:, :na, :na] = A[:, ea][:, :, ea] + (
        a_ep[:, :, None] * (bqq * dinv)[:, None, None] * a_pe[:, None, :]
    )
    out[:, :na, na:] = a_ep[:, :, None] * (b_qe * dinv[:, None])[:, None, :]
    out[:, na:, :na] = (b_eq * dinv[:, None])[:, :, None] * a_pe[:, None, :]
    out[:, na:, na:] = B[:, eb][:, :, eb] + (
        b_eq[:, :, None] * (app * dinv)[:, None, None] * b_qe[:, None, :]
    )
    labels = tuple(a.port_labels[i] for i in ea) + tuple(b.port_labels[i] for i in eb)
    return SMatrix(grid=a.grid, entries=out, port_labels=labels)


@dataclass(frozen=True)
class ChainLink:
    """One element of a cascade chain, with its through ports designated.

    ``in_port`` joins the previous element's out_port (or is the chain
    input for the first element); ``out_port`` feeds the next element (or
    is the chain through output for the last). All other ports are taps.
    """

    element: SMatrix
    in_port: int = 0
    out_port: int = 1

    def __post_init__(self):
        n = self.element.n_ports
        if not (0 <= self.in_port < n and 0 <= self.out_port < n):
            raise ValueError("chain link port out of range")
        if self.in_port == self.out_port:
            raise ValueError("chain link in_port and out_port must differ")


def cascade_chain(links, singular_tol: float = SINGULAR_CONNECTION_TOL) -> SMatrix:
    """Left fold of cascade_pair along a chain of elements.

    External port order of the result is deterministic: the first link's
    in_port, then every tap port in chain order (element order, ascending
    port index within an element), then the last link's out_port.
    """
    links = list(links)
    if not links:
        raise ValueError("cascade_chain needs at least one link")

    # Internal tracking labels are unique per (element, port).
    def tagged(i: int, link: ChainLink) -> SMatrix:
        return link.element.relabeled([f"<{i}:{j}>" for j in range(link.element.n_ports)])

    acc = tagged(0, links[0])
    for i in range(1, len(links)):
        nxt = tagged(i, links[i])
        out_tag = f"<{i - 1}:{links[i - 1].out_port}>"
        acc = cascade_pair(acc, nxt, acc.port_labels.index(out_tag), links[i].in_port,
                           singular_tol=singular_tol)

    want = [f"<0:{links[0].in_port}>"]
    for i, link in enumerate(links):
        want += [f"<{i}:{j}>" for j in range(link.element.n_ports)
                 if j not in (link.in_port, link.out_port)]
    want.append(f"<{len(links) - 1}:{links[-1].out_port}>")

    order = [acc.port_labels.index(tag) for tag in want]
    final_labels = []
    for tag in want:
        i, j = tag.strip("<>").split(":")
        final_labels.append(links[int(i)].element.port_labels[int(j)])
    return acc.permuted(order).relabeled(final_labels)


@dataclass(frozen=True)
class ConnectionGraph:
    """Elements plus joint and external-port bookkeeping for the oracle.

    ``joints`` holds (element_i, port_i, element_j, port_j) tuples;
    ``external_ports`` is the ordered list of (element, port) pairs that
    remain open. Every element port must appear exactly once overall.
    """

    elements: tuple[SMatrix, ...]
    joints: tuple[tuple[int, int, int, int], ...]
    external_ports: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "joints", tuple(tuple(j) for j in self.joints))
        object.__setattr__(self, "external_ports", tuple(tuple(p) for p in self.external_ports))
        if not self.elements:
            raise ValueError("graph has no elements")
        grid = self.elements[0].grid
        for el in self.elements[1:]:
            if el.grid != grid:
                raise GridMismatchError("all graph elements must share one grid")
        seen = set()
        for (i, p, j, q) in self.joints:
            for (ei, pi) in ((i, p), (j, q)):
                self._check_port(ei, pi)
                if (ei, pi) in seen:
                    raise ValueError(f"element port ({ei},{pi}) used more than once")
                seen.add((ei, pi))
        for (i, p) in self.external_ports:
            self._check_port(i, p)
            if (i, p) in seen:
                raise ValueError(f"element port ({i},{p}) used more than once")
            seen.add((i, p))
        total = sum(el.n_ports for el in self.elements)
        if len(seen) != total:
            raise ValueError("every element port must appear in joints or external_ports")

    def _check_port(self, i: int, p: int) -> None:
        if not (0 <= i < len(self.elements)):
            raise ValueError(f"element index {i} out of range")
        if not (0 <= p < self.elements[i].n_ports):
            raise ValueError(f"port {p} out of range for element {i}")


def brute_force_solve(graph: ConnectionGraph, excitation_port: int) -> np.ndarray:
    """Outgoing waves at all external ports for a unit incident wave.

    Assembles the full linear system over the incident amplitudes a of
    every element port, with joint constraints a_p = b_q, a_q = b_p and
    matched terminations at the non-excited external ports, then solves
    it directly per frequency. Returns shape (n_freq, n_external).

    This is the module's independent oracle: it shares no code path with
    cascade_pair/cascade_chain.
    """
    if not (0 <= excitation_port < len(graph.external_ports)):
        raise ValueError("excitation port index out of range")
    offsets = np.cumsum([0] + [el.n_ports for el in graph.elements])
    n_unknown = int(offsets[-1])
    n_freq = len(graph.elements[0].grid)

    m = np.zeros((n_freq, n_unknown, n_unknown), dtype=complex)
    rhs = np.zeros((n_freq, n_unknown), dtype=complex)
    row = 0
    for (i, p, j, q) in graph.joints:
        si, sj = graph.elements[i].entries, graph.elements[j].entries
        m[:, row, offsets[i] + p] += 1.0
        m[:, row, offsets[j]:offsets[j] + sj.shape[1]] -= sj[:, q, :]
        row += 1
        m[:, row, offsets[j] + q] += 1.0
        m[:, row, offsets[i]:offsets[i] + si.shape[1]] -= si[:, p, :]
        row += 1
    for k, (i, p) in enumerate(graph.external_ports):
        m[:, row, offsets[i] + p] = 1.0
        if k == excitation_port:
            rhs[:, row] = 1.0
        row += 1

    try:
        x = np.linalg.solve(m, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        for k in range(n_freq):
            try:
                np.linalg.solve(m[k], rhs[k])
            except np.linalg.LinAlgError:
                raise SingularSystemError(float(graph.elements[0].grid.points[k])) from None
        raise

    out = np.empty((n_freq, len(graph.external_ports)), dtype=complex)
    for k, (i, p) in enumerate(graph.external_ports):
        si = graph.elements[i].entries
        out[:, k] = np.einsum("fl,fl->f", si[:, p, :], x[:, offsets[i]:offsets[i] + si.shape[1]])
    return out


def reduced_smatrix(graph: ConnectionGraph) -> SMatrix:
    """Assemble the reduced S-matrix column by column via the oracle."""
    n_ext = len(graph.external_ports)
    grid = graph.elements[0].grid
    entries = np.empty((len(grid), n_ext, n_ext), dtype=complex)
    for col in range(n_ext):
        entries[:, :, col] = brute_force_solve(graph, col)
    labels = tuple(
        graph.elements[i].port_labels[p] for (i, p) in graph.external_ports
    )
    return SMatrix(grid=grid, entries=entries, port_labels=labels)
