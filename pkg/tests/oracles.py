"""Independent reference implementations used by the tests.

These deliberately avoid the package's own algorithms: brute force, recursion
or plain Python loops where the package uses sweeps, heaps or numpy.
"""

from __future__ import annotations

import math


def dyadic_edges(gop_size: int, num_frames: int) -> set[tuple[int, int]]:
    """Frame-level temporal edges by recursive mid-point splitting of each GOP."""
    edges = set()

    def split(lo, hi):
        if hi - lo < 2:
            return
        mid = (lo + hi) // 2
        if mid < num_frames:
            edges.add((lo, mid))
            if hi < num_frames:
                edges.add((hi, mid))
        split(lo, mid)
        split(mid, hi)

    for start in range(0, num_frames, gop_size):
        split(start, start + gop_size)
    return edges


def iterative_deletion(received, parents) -> set:
    """Repeatedly drop units with a missing prerequisite until nothing changes."""
    alive = set(received)
    changed = True
    while changed:
        changed = False
        for u in list(alive):
            if any(p not in alive for p in parents(u)):
                alive.discard(u)
                changed = True
    return alive


def ancestors(unit, parents) -> set:
    seen = set()
    stack = list(parents(unit))
    while stack:
        u = stack.pop()
        if u not in seen:
            seen.add(u)
            stack.extend(parents(u))
    return seen


def mse_loops(a, b) -> float:
    total = 0
    n = 0
    for row_a, row_b in zip(a, b):
        for x, y in zip(row_a, row_b):
            total += (int(x) - int(y)) ** 2
            n += 1
    return total / n


def psnr_loops(a, b, cap=100.0) -> float:
    m = mse_loops(a, b)
    if m == 0:
        return cap
    return 10 * math.log10(255 * 255 / m)


def fragment_sizes(nalu_size: int, mtu: int, overhead: int) -> list[int]:
    payload = mtu - overhead
    out = []
    left = nalu_size
    while left > 0:
        chunk = min(payload, left)
        out.append(chunk + overhead)
        left -= chunk
    return out


def fifo_link(arrivals, rate_of, capacity_bytes, prop_delay, dt=None):
    """Event-by-event drop-tail FIFO with per-packet service computed step by step.

    ``arrivals`` is a list of (time, size_bytes); ``rate_of(t)`` the link rate.
    Service integrates the rate in small fixed slices when ``dt`` is given, else
    uses the closed form for a constant rate.  Returns per-packet arrival time or
    None if dropped.
    """
    out = []
    in_system = []  # (finish_time, size) of packets queued or in service, FIFO
    server_free = -math.inf
    for t, size in arrivals:
        in_system = [(f, s) for f, s in in_system if f > t]
        # bytes waiting (not the one in service)
        waiting = sum(s for f, s in in_system[1:]) if in_system else 0
        if in_system and waiting + size > capacity_bytes:
            out.append(None)
            continue
        start = max(t, server_free)
        if dt is None:
            finish = start + size * 8 / rate_of(start)
        else:
            bits = size * 8.0
            finish = start
            while bits > 1e-9:
                r = rate_of(finish)
                boundary = (math.floor(finish / dt + 1e-9) + 1) * dt
                step = min(boundary - finish, bits / r)
                bits -= r * step
                finish += step
        server_free = finish
        in_system.append((finish, size))
        out.append(finish + prop_delay)
    return out
