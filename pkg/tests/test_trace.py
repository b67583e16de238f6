import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import fragment_sizes
from svcsim.errors import ConfigError, TraceFormatError
from svcsim.scenario import default_ladder, ladder_from_cells
from svcsim.svc_model import GopConfig, LayerId, Scheme
from svcsim.trace import (
    BitrateLadder,
    LadderRow,
    NaluKind,
    NaluRecord,
    ReceivedRecord,
    layer_cell_rates,
    packetize,
    parse_bitrate_ladder,
    parse_nalu_trace,
    parse_packet_trace,
    parse_received_trace,
    synthesize_trace,
    write_bitrate_ladder,
    write_nalu_trace,
    write_packet_trace,
    write_received_trace,
)

GOP = GopConfig(4, 2, Scheme.MGS, 4, 32)


def nalu(i, frame, size, q=0, t=0):
    kind = NaluKind.BASE if q == 0 else NaluKind.ENHANCEMENT
    return NaluRecord(i, frame, LayerId(0, t, q), size, kind)


def ladder_1400():
    cells = {(0, 0): 300.0, (1, 0): 200.0, (2, 0): 400.0, (0, 1): 150.0, (1, 1): 100.0, (2, 1): 250.0}
    return ladder_from_cells(cells, (20, 23, 26, 28.5, 31, 34))


# ---------------------------------------------------------------- packetize

def test_packetize_3000_byte_nalu():
    pkts = packetize([nalu(0, 0, 3000)], 1500, 40, 30.0)
    assert [p.size_bytes for p in pkts] == [1500, 1500, 120]
    assert [p.fragment_index for p in pkts] == [0, 1, 2]
    assert sum(p.size_bytes - 40 for p in pkts) == 3000


def test_packetize_small_and_empty():
    assert [p.size_bytes for p in packetize([nalu(0, 0, 100)], 1500, 40)] == [140]
    assert packetize([], 1500, 40) == []


def test_packetize_send_times_follow_frames():
    nalus = [NaluRecord(0, -1, LayerId(), 24, NaluKind.PARAMETER_SET), nalu(1, 0, 10), nalu(2, 3, 10)]
    pkts = packetize(nalus, 1500, 40, 30.0, start_time=10.0)
    assert [p.send_time for p in pkts] == [10.0, 10.0, 10.0 + 3 / 30.0]


def test_packetize_rejects_small_mtu():
    with pytest.raises(ConfigError):
        packetize([nalu(0, 0, 10)], 40, 40)


@given(st.lists(st.integers(1, 20000), max_size=30), st.integers(100, 3000), st.integers(0, 80))
def test_packetize_conserves_bytes_and_order(sizes, mtu, overhead):
    if mtu <= overhead:
        return
    nalus = [nalu(i, i // 2, s, q=i % 2) for i, s in enumerate(sizes)]
    pkts = packetize(nalus, mtu, overhead, 30.0)
    assert all(p.size_bytes <= mtu for p in pkts)
    assert sum(p.size_bytes - overhead for p in pkts) == sum(sizes)
    assert [p.nalu_id for p in pkts] == sorted(p.nalu_id for p in pkts)
    assert [p.packet_id for p in pkts] == list(range(len(pkts)))
    for n in nalus:
        assert [p.size_bytes for p in pkts if p.nalu_id == n.nalu_id] == fragment_sizes(n.size_bytes, mtu, overhead)


# ---------------------------------------------------------------- ladder

def test_ladder_validation():
    rows = [LadderRow(0, LayerId(0, 0, 0), 7.5, 200, 20), LadderRow(1, LayerId(0, 1, 0), 15, 200, 22)]
    with pytest.raises(ConfigError):
        BitrateLadder(tuple(rows))
    with pytest.raises(ConfigError):
        BitrateLadder(())
    rows[1] = LadderRow(1, LayerId(0, 1, 0), 15, 300, 19)
    with pytest.raises(ConfigError):
        BitrateLadder(tuple(rows))


def test_cell_rates_invert_cumulative_boxes():
    cells = layer_cell_rates(ladder_1400(), GOP)
    assert cells == {(0, 0): 300, (1, 0): 200, (2, 0): 400, (0, 1): 150, (1, 1): 100, (2, 1): 250}


def test_default_ladder_has_six_points():
    lad = default_ladder()
    assert len(lad) == 6
    assert {(r.layer.tid, r.layer.qid) for r in lad} == {(t, q) for t in range(3) for q in range(2)}
    assert 19 <= lad.lowest.encoded_psnr_db and lad.top.encoded_psnr_db <= 35


# ---------------------------------------------------------------- synthesis

def test_synthetic_trace_realizes_full_rate():
    nalus, measured = synthesize_trace(GOP, 120, ladder_1400(), 30.0, 5)
    total_bits = sum(n.size_bytes for n in nalus) * 8
    assert abs(total_bits / 4.0 - 1400e3) <= 0.02 * 1400e3
    for nominal, got in zip(ladder_1400(), measured):
        assert abs(got.bitrate_kbps - nominal.bitrate_kbps) <= 0.02 * nominal.bitrate_kbps


def test_synthetic_trace_structure():
    nalus, _ = synthesize_trace(GOP, 64, ladder_1400(), 30.0, 3)
    assert nalus[0].kind is NaluKind.PARAMETER_SET
    assert len(nalus) == 1 + 64 * 2
    assert [n.nalu_id for n in nalus] == list(range(len(nalus)))
    by_frame = {}
    for n in nalus[1:]:
        by_frame.setdefault(n.frame_index, {})[n.layer.qid] = n.size_bytes
    assert all(q[0] > q[1] for q in by_frame.values())


def test_single_frame_single_quality():
    gop = GopConfig(1, 1, Scheme.FGS)
    lad = BitrateLadder((LadderRow(0, LayerId(0, 0, 0), 30.0, 100.0, 30.0),))
    nalus, _ = synthesize_trace(gop, 1, lad, 30.0, 0)
    assert len(nalus) == 2


def test_synthesis_is_deterministic():
    a = synthesize_trace(GOP, 200, ladder_1400(), 30.0, 11)
    b = synthesize_trace(GOP, 200, ladder_1400(), 30.0, 11)
    c = synthesize_trace(GOP, 200, ladder_1400(), 30.0, 12)
    assert a == b
    assert a[0] != c[0]


def test_synthesis_rejects_mismatched_ladder():
    with pytest.raises(ConfigError):
        synthesize_trace(GopConfig(8, 2, Scheme.FGS), 16, ladder_1400(), 30.0, 0)


@given(st.integers(0, 10_000), st.sampled_from([0.0, 0.2, 0.5]))
def test_ladder_realization_property(seed, sigma):
    nalus, _ = synthesize_trace(GOP, 256, ladder_1400(), 30.0, seed, sigma=sigma)
    duration = 256 / 30.0
    for row in ladder_1400():
        bits = 8 * sum(n.size_bytes for n in nalus if n.layer.within(row.layer))
        assert abs(bits / duration / 1000 - row.bitrate_kbps) <= 0.02 * row.bitrate_kbps


# ---------------------------------------------------------------- text formats

def roundtrip(write, parse, records):
    buf = io.StringIO()
    write(records, buf)
    buf.seek(0)
    return parse(buf)


def test_nalu_trace_roundtrip():
    nalus, _ = synthesize_trace(GOP, 500, ladder_1400(), 30.0, 1)
    assert len(nalus) > 1000 - 1
    assert roundtrip(write_nalu_trace, parse_nalu_trace, nalus) == nalus


def test_packet_and_received_roundtrip():
    nalus, _ = synthesize_trace(GOP, 40, ladder_1400(), 30.0, 1)
    pkts = packetize(nalus, 1500, 40, 30.0, 10.0)
    assert roundtrip(write_packet_trace, parse_packet_trace, pkts) == pkts
    recs = [ReceivedRecord(p.packet_id, p.send_time + 0.0123456789, 0.0123456789) for p in pkts]
    assert roundtrip(write_received_trace, parse_received_trace, recs) == recs


def test_ladder_roundtrip(tmp_path):
    lad = ladder_1400()
    write_bitrate_ladder(lad, tmp_path / "l.txt")
    assert parse_bitrate_ladder(tmp_path / "l.txt") == lad


def test_times_have_six_decimals(tmp_path):
    pkts = packetize([nalu(0, 0, 10)], 1500, 40, 30.0, 10.0)
    write_packet_trace(pkts, tmp_path / "p.txt")
    line = (tmp_path / "p.txt").read_text().splitlines()[1]
    assert line.split()[1] == "10.000000"


def test_negative_size_names_line(tmp_path):
    path = tmp_path / "n.txt"
    path.write_text("# header\n0 -1 0 0 0 24 ps\n1 0 0 0 0 -5 base\n")
    with pytest.raises(TraceFormatError) as info:
        parse_nalu_trace(path)
    assert info.value.line == 3
    assert "line 3" in str(info.value)
    assert str(path) in str(info.value)


@pytest.mark.parametrize("text,line,column", [
    ("0 0 0 0 0 10 base\n0 1 0 0 0 10 base\n", 2, 1),
    ("0 0 0 0 0 10 bogus\n", 1, 7),
    ("0 0 0 0\n", 1, None),
    ("0 0 0 x 0 10 base\n", 1, 4),
    ("0 0 0 0 1 10 base\n", 1, None),
])
def test_nalu_parse_errors(text, line, column):
    with pytest.raises(TraceFormatError) as info:
        parse_nalu_trace(io.StringIO(text))
    assert info.value.line == line
    assert info.value.column == column


def test_ladder_parse_rejects_non_increasing_rates():
    text = "0 0 0 0 7.5 300 20\n1 0 0 1 7.5 250 22\n"
    with pytest.raises(TraceFormatError):
        parse_bitrate_ladder(io.StringIO(text))


def test_received_parse_rejects_negative_delay():
    with pytest.raises(TraceFormatError) as info:
        parse_received_trace(io.StringIO("1 0.5 0.1\n2 0.6 -0.1\n"))
    assert info.value.line == 2 and info.value.column == 3
