"""Layered structure of an SVC-coded video.

Frames are arranged in a dyadic hierarchical-B GOP (temporal levels T0..Tn)
and each frame carries one coded unit per quality level (Q0 base, Q1.. enhancement).
The prediction structure between those units differs per quality-scalability
scheme and is captured by a :class:`DependencyGraph`:

* CGS -- every enhancement layer runs its own inter-frame prediction loop that
  mirrors the temporal edges of the base layer.
* FGS -- enhancement units are predicted from the base unit of the same frame only.
* MGS -- reference (key) frames recur every ``mgs_key_period`` frames; their
  enhancement is predicted from their own base and is in turn the reference for
  the following non-reference frames.  A reference frame refreshes the base layer,
  so it takes no inter-frame prerequisites.
"""

from __future__ import annotations

import enum
import graphlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ConfigError


class Scheme(str, enum.Enum):
    CGS = "cgs"
    FGS = "fgs"
    MGS = "mgs"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, Scheme):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown scheme {value!r}; expected one of cgs, fgs, mgs") from None

    def __str__(self):
        return self.value


@dataclass(frozen=True, order=True)
class LayerId:
    """DTQ identifier of a scalability layer."""

    did: int = 0
    tid: int = 0
    qid: int = 0

    def __post_init__(self):
        for name in ("did", "tid", "qid"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ConfigError(f"LayerId.{name} must be a non-negative integer, got {value!r}")
        # units are hashed constantly during pruning; compute once
        object.__setattr__(self, "_hash", hash((self.did, self.tid, self.qid)))

    def __hash__(self):
        return self._hash

    def within(self, selection: "LayerId") -> bool:
        """True if this layer is part of the operating point ``selection``."""
        return self.did <= selection.did and self.tid <= selection.tid and self.qid <= selection.qid

    def __str__(self):
        return f"D{self.did}T{self.tid}Q{self.qid}"


@dataclass(frozen=True, order=True)
class CodedUnit:
    frame_index: int
    layer: LayerId

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.frame_index, self.layer)))

    def __hash__(self):
        return self._hash

    @property
    def tid(self) -> int:
        return self.layer.tid

    @property
    def qid(self) -> int:
        return self.layer.qid

    def __str__(self):
        return f"f{self.frame_index}:{self.layer}"


@dataclass(frozen=True)
class GopConfig:
    """GOP / layering parameters of one encoding.

    ``intra_period`` controls the key-picture chain: when set, a T0 frame that is
    not at a multiple of ``intra_period`` is predicted from the previous T0 frame.
    When ``None`` every T0 frame is intra coded.
    """

    gop_size: int = 4
    quality_levels: int = 2
    scheme: Scheme = Scheme.MGS
    mgs_key_period: int | None = None
    intra_period: int | None = None
    temporal_levels: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        g = self.gop_size
        if not isinstance(g, int) or g < 1 or g & (g - 1):
            raise ConfigError(f"gop_size must be a power of two >= 1, got {g!r}", "gop.gop_size")
        levels = g.bit_length()
        if self.temporal_levels is None:
            object.__setattr__(self, "temporal_levels", levels)
        elif self.temporal_levels != levels:
            raise ConfigError(
                f"temporal_levels must equal log2(gop_size)+1 = {levels}, got {self.temporal_levels}",
                "gop.temporal_levels",
            )
        if not isinstance(self.quality_levels, int) or self.quality_levels < 1:
            raise ConfigError("quality_levels must be >= 1", "gop.quality_levels")
        if self.scheme is Scheme.MGS:
            if self.mgs_key_period is None:
                object.__setattr__(self, "mgs_key_period", g)
            k = self.mgs_key_period
            if not isinstance(k, int) or k < 1:
                raise ConfigError("mgs_key_period must be >= 1", "gop.mgs_key_period")
            if k % g:
                # reference frames must be T0 pictures
                raise ConfigError("mgs_key_period must be a multiple of gop_size", "gop.mgs_key_period")
        if self.intra_period is not None:
            p = self.intra_period
            if not isinstance(p, int) or p < 1 or p % g:
                raise ConfigError("intra_period must be a positive multiple of gop_size", "gop.intra_period")

    def frame_tid(self, frame_index: int) -> int:
        return frame_tid(frame_index, self.gop_size)

    def is_reference(self, frame_index: int) -> bool:
        """MGS reference (key) frame test; always False for other schemes."""
        return self.scheme is Scheme.MGS and frame_index % self.mgs_key_period == 0


def frame_tid(frame_index: int, gop_size: int) -> int:
    """Temporal level of a frame in a dyadic GOP (T0 at multiples of gop_size)."""
    pos = frame_index % gop_size
    if pos == 0:
        return 0
    levels = gop_size.bit_length()
    trailing = (pos & -pos).bit_length() - 1
    return levels - 1 - trailing


def temporal_parents(frame_index: int, gop: GopConfig, num_frames: int) -> tuple[int, ...]:
    tid = frame_tid(frame_index, gop.gop_size)
    if tid == 0:
        if gop.intra_period is None or frame_index % gop.intra_period == 0:
            return ()
        return (frame_index - gop.gop_size,)
    d = gop.gop_size >> tid
    parents = [frame_index - d]
    if frame_index + d < num_frames:
        parents.append(frame_index + d)
    return tuple(parents)


def base_unit(frame_index: int, gop_size: int) -> CodedUnit:
    return CodedUnit(frame_index, LayerId(0, frame_tid(frame_index, gop_size), 0))


@dataclass(frozen=True)
class DependencyGraph:
    """Directed acyclic graph; an edge ``(a, b)`` means *a* is required to decode *b*."""

    nodes: frozenset
    edges: frozenset
    gop: GopConfig | None = None
    _parents: Mapping = field(init=False, repr=False, compare=False)
    _order: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", frozenset(self.edges))
        parents: dict[CodedUnit, list[CodedUnit]] = {u: [] for u in self.nodes}
        for a, b in self.edges:
            if a not in parents or b not in parents:
                raise ConfigError(f"edge {a} -> {b} references a unit outside the graph")
            parents[b].append(a)
        frozen = {u: tuple(sorted(p)) for u, p in parents.items()}
        try:
            order = tuple(graphlib.TopologicalSorter(
                {u: frozen[u] for u in sorted(frozen)}).static_order())
        except graphlib.CycleError as exc:
            raise ConfigError(f"dependency graph has a cycle: {exc.args[1]}") from None
        object.__setattr__(self, "_parents", frozen)
        object.__setattr__(self, "_order", order)

    def parents(self, unit: CodedUnit) -> tuple[CodedUnit, ...]:
        return self._parents[unit]

    def topological_order(self) -> tuple[CodedUnit, ...]:
        return self._order

    def units_of_frame(self, frame_index: int) -> list[CodedUnit]:
        return sorted(u for u in self.nodes if u.frame_index == frame_index)

    @property
    def num_frames(self) -> int:
        return 1 + max((u.frame_index for u in self.nodes), default=-1)


def build_temporal_hierarchy(gop: GopConfig, num_frames: int) -> DependencyGraph:
    """Base-layer graph of the dyadic temporal hierarchy (no quality units)."""
    if not isinstance(gop, GopConfig):
        raise ConfigError("gop must be a GopConfig")
    if num_frames < 1:
        raise ConfigError("num_frames must be >= 1")
    nodes = [base_unit(f, gop.gop_size) for f in range(num_frames)]
    edges = set()
    for f in range(num_frames):
        for p in temporal_parents(f, gop, num_frames):
            edges.add((nodes[p], nodes[f]))
    return DependencyGraph(frozenset(nodes), frozenset(edges), gop)


def add_quality_edges(graph: DependencyGraph, gop: GopConfig) -> DependencyGraph:
    """Add enhancement units and the scheme-specific quality prediction edges."""
    scheme = Scheme.parse(gop.scheme)
    if gop.quality_levels == 1:
        return graph
    nq = gop.quality_levels
    nodes = set(graph.nodes)
    base_edges = [(a, b) for a, b in graph.edges if a.qid == 0 and b.qid == 0]
    frames = sorted({u.frame_index for u in graph.nodes})

    def unit(f, q):
        return CodedUnit(f, LayerId(0, frame_tid(f, gop.gop_size), q))

    for f in frames:
        for q in range(1, nq):
            nodes.add(unit(f, q))

    edges = set(graph.edges)
    if scheme is Scheme.CGS:
        for f in frames:
            for q in range(1, nq):
                edges.add((unit(f, q - 1), unit(f, q)))
        for a, b in base_edges:
            for q in range(1, nq):
                edges.add((unit(a.frame_index, q), unit(b.frame_index, q)))
    elif scheme is Scheme.FGS:
        for f in frames:
            for q in range(1, nq):
                edges.add((unit(f, 0), unit(f, q)))
    elif scheme is Scheme.MGS:
        k = gop.mgs_key_period
        for f in frames:
            for q in range(1, nq):
                edges.add((unit(f, q - 1), unit(f, q)))
            if f % k == 0:
                # key picture: base layer refresh
                edges -= {(a, b) for a, b in base_edges if b.frame_index == f}
            else:
                ref_top = unit(f - f % k, nq - 1)
                for q in range(nq):
                    edges.add((ref_top, unit(f, q)))
    else:  # pragma: no cover - Scheme.parse guards this
        raise ConfigError(f"unknown scheme {scheme!r}")
    return DependencyGraph(frozenset(nodes), frozenset(edges), gop)


def build_dependency_graph(gop: GopConfig, num_frames: int) -> DependencyGraph:
    return add_quality_edges(build_temporal_hierarchy(gop, num_frames), gop)


def decodable_units(received: Iterable[CodedUnit], graph: DependencyGraph) -> frozenset:
    """Largest subset of ``received`` that is closed under prerequisites."""
    have = set(received)
    ok: set[CodedUnit] = set()
    for u in graph.topological_order():
        if u in have and all(p in ok for p in graph.parents(u)):
            ok.add(u)
    return frozenset(ok)


def operating_point_graph(graph: DependencyGraph, sent: Iterable[CodedUnit]) -> DependencyGraph:
    """Graph as seen by a decoder of the extracted sub-stream ``sent``.

    MGS lets the decoder predict from whichever quality of a reference frame is
    present, so an edge from a reference enhancement unit that was never sent is
    re-pointed at the best quality of that frame that was sent.  CGS and FGS keep
    their edges: a unit whose prerequisite was not sent is undecodable.
    """
    gop = graph.gop
    if gop is None or gop.scheme is not Scheme.MGS:
        return graph
    sent = set(sent)
    if graph.nodes <= sent:
        return graph
    edges = set()
    changed = False
    for a, b in graph.edges:
        if a.qid > 0 and a.frame_index != b.frame_index and a not in sent:
            q = a.qid - 1
            while q > 0 and CodedUnit(a.frame_index, LayerId(a.layer.did, a.tid, q)) not in sent:
                q -= 1
            a = CodedUnit(a.frame_index, LayerId(a.layer.did, a.tid, q))
            changed = True
        edges.add((a, b))
    if not changed:
        return graph
    return DependencyGraph(graph.nodes, frozenset(edges), gop)
