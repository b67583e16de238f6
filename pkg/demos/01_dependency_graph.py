"""
Who depends on whom in a layered GOP
====================================

Build the unit-level prediction graph for one small encoding under each of the
three quality-scalability schemes, then knock out one unit and see which frames
stop being decodable.
"""

from svcsim import CodedUnit, GopConfig, LayerId, Scheme, build_dependency_graph, decodable_units

# Two GOPs of four frames, base plus one enhancement level.
for scheme in Scheme:
    gop = GopConfig(4, 2, scheme, 4 if scheme is Scheme.MGS else None)
    graph = build_dependency_graph(gop, 8)
    print(f"== {scheme.value.upper()}: {len(graph.nodes)} units, {len(graph.edges)} edges")

    # prerequisites of the enhancement unit of frame 2 (a T1 frame)
    u = CodedUnit(2, LayerId(0, 1, 1))
    print("  parents of", u, "->", ", ".join(str(p) for p in sorted(graph.parents(u), key=lambda p: (p.frame_index, p.qid))))

    # lose the enhancement unit of anchor frame 4
    lost = CodedUnit(4, LayerId(0, 0, 1))
    ok = decodable_units(graph.nodes - {lost}, graph)
    broken = sorted({v.frame_index for v in graph.nodes - ok})
    print("  losing", lost, "breaks frames", broken)
