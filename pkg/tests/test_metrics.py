"""Windowed statistics, CSV layout, and summary re-derivation."""

import math
import os

import pytest

from qosnetsim.metrics import (
    CSV_HEADER,
    Collector,
    MetricsConfig,
    delay_variation,
    format_value,
    load_summary,
    percentile_95,
)
from qosnetsim.traffic import Packet


def pkt(cls="voice", size=200, src="a", dst="z", created=0.0, unit_id=0,
        unit_seq=0, unit_count=1, pid=0):
    return Packet(pid=pid, traffic_class=cls, dscp=46, size_bytes=size,
                  payload_bytes=size - 40, src=src, dst=dst, created_at=created,
                  unit_id=unit_id, unit_seq=unit_seq, unit_count=unit_count)


def collector(duration=10.0, warmup=2.0, window=1.0, **kw):
    return Collector(MetricsConfig(warmup_s=warmup, duration_s=duration,
                                   window_s=window, **kw))


# -- variance oracle ---------------------------------------------------------

def test_delay_variation_two_known_samples():
    # mean 2 ms, deviations +-1 ms -> population variance 1e-6 s^2
    assert delay_variation([0.001, 0.003]) == pytest.approx(1e-6, rel=1e-12)


def test_delay_variation_single_sample_is_zero():
    assert delay_variation([0.005]) == 0.0


def test_delay_variation_empty_window_rejected():
    with pytest.raises(ValueError):
        delay_variation([])


def test_delay_variation_matches_two_pass_reference():
    # reference: textbook two-pass population variance
    samples = [0.0001 * (i % 7) + 0.00003 * (i % 3) for i in range(1000)]
    mean = sum(samples) / len(samples)
    reference = sum((s - mean) ** 2 for s in samples) / len(samples)
    assert delay_variation(samples) == pytest.approx(reference, rel=1e-12)


def test_percentile_95_nearest_rank():
    values = sorted(float(i) for i in range(1, 101))
    assert percentile_95(values) == 95.0
    assert percentile_95([7.0]) == 7.0
    assert percentile_95([1.0, 2.0]) == 2.0  # ceil(1.9) = 2 -> index 1


# -- recording ---------------------------------------------------------------

def test_negative_delays_are_rejected():
    col = collector()
    with pytest.raises(Exception):
        col.record_queuing_delay("voice", -1e-9, now=1.0)


def test_video_e2e_is_per_frame_at_last_segment():
    col = collector()
    for seq, t in enumerate((1.0, 1.1, 1.4)):
        col.record_delivery(
            pkt(cls="video", src="cam", created=0.5, unit_id=3,
                unit_seq=seq, unit_count=3, pid=seq),
            now=t, observed=True)
    samples = col.e2e["video"]
    assert len(samples) == 1
    t, delay = samples[0]
    assert t == 1.4
    assert delay == pytest.approx(0.9)  # last segment lands 0.9 s after emit


def test_truncated_frame_is_flushed_at_finalize():
    col = collector()
    col.record_delivery(
        pkt(cls="video", src="cam", created=0.5, unit_id=1,
            unit_seq=0, unit_count=12), now=1.0, observed=True)
    assert "video" not in col.e2e or not col.e2e["video"]
    col.finalize(10.0)
    t, delay = col.e2e["video"][0]
    assert t == 1.0  # sampled where the last delivered segment landed
    assert delay == pytest.approx(0.5)


def test_unobserved_deliveries_count_only_in_totals():
    col = collector()
    col.record_delivery(pkt(), now=1.0, observed=False)
    assert col.counters["delivered_packets"]["voice"] == 1
    assert col.delivered_bytes_by_node["z"] == 200
    assert "voice" not in col.deliveries
    assert "voice" not in col.e2e


def test_buffer_usage_keeps_last_sample_per_instant():
    col = collector()
    col.record_buffer_usage("video", 100, now=1.0)
    col.record_buffer_usage("video", 300, now=1.0)
    col.record_buffer_usage("video", 200, now=2.0)
    assert col.buffer_samples["video"] == [(1.0, 300), (2.0, 200)]


# -- export ------------------------------------------------------------------

def fill_collector(col):
    col.record_emit("voice", 200)
    col.record_emit("voice", 200)
    col.record_queuing_delay("voice", 0.001, now=0.5)   # warm-up
    col.record_queuing_delay("voice", 0.001, now=2.5)
    col.record_queuing_delay("voice", 0.003, now=2.6)
    col.record_delivery(pkt(created=2.0, pid=1), now=2.5, observed=True)
    col.record_drop("video", 1500, "overflow", now=3.5)
    col.record_buffer_usage("video", 4500, now=3.0)
    col.finalize(10.0)


def test_csv_rows_are_well_formed(tmp_path):
    col = collector()
    fill_collector(col)
    path = tmp_path / "metrics.csv"
    col.export_csv(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    for line in lines[1:]:
        time_s, cls, metric, value, warmup = line.split(",")
        float(time_s)
        float(value)
        assert warmup in ("0", "1")
    # spot checks: warm-up flagging and fixed-point formats
    assert "0.500000,voice,queuing_delay,0.001000,1" in lines
    assert "2.500000,voice,queuing_delay,0.001000,0" in lines
    # windowed variance rows appear only for windows that have samples
    variance_rows = [l for l in lines if ",queue_delay_variation," in l]
    assert variance_rows == [
        "1.000000,voice,queue_delay_variation,0.000000000000,1",
        "3.000000,voice,queue_delay_variation,0.000001000000,0",
    ]


def test_variance_row_value_is_the_window_variance():
    col = collector()
    fill_collector(col)
    rows = col.build_rows()
    var_rows = [r for r in rows if r[0] == "queue_delay_variation" and r[2] == 3.0]
    assert len(var_rows) == 1
    assert var_rows[0][3] == pytest.approx(delay_variation([0.001, 0.003]), rel=1e-12)


def test_drop_series_covers_every_window_with_zeros():
    col = collector()
    fill_collector(col)
    rows = [r for r in col.build_rows() if r[0] == "traffic_drop_bps" and r[1] == "video"]
    assert len(rows) == 10  # duration 10 s / window 1 s
    by_time = {t: v for _, _, t, v in rows}
    assert by_time[4.0] == pytest.approx(1500 * 8.0)  # drop at t=3.5
    assert by_time[1.0] == 0.0


def test_drop_total_row_closes_the_series():
    col = collector()
    fill_collector(col)
    rows = [r for r in col.build_rows() if r[0] == "traffic_drop_total_bytes"]
    video = [r for r in rows if r[1] == "video"]
    assert video == [("traffic_drop_total_bytes", "video", 10.0, 1500.0)]
    voice = [r for r in rows if r[1] == "voice"]
    assert voice == [("traffic_drop_total_bytes", "voice", 10.0, 0.0)]


def test_exports_are_deterministic(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        col = collector()
        fill_collector(col)
        col.export_all(str(out))
    for name in ("metrics.csv", "summary.csv", "stats.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_summary_matches_a_reader_reparsing_the_csv(tmp_path):
    col = collector()
    fill_collector(col)
    col.export_all(str(tmp_path))
    table = {}
    with open(tmp_path / "metrics.csv") as fh:
        assert fh.readline().strip() == CSV_HEADER
        for line in fh:
            _, cls, metric, value, warmup = line.strip().split(",")
            if warmup == "1" or metric == "traffic_drop_total_bytes":
                continue
            table.setdefault((cls, metric), []).append(float(value))
    summary = load_summary(str(tmp_path / "summary.csv"))
    assert set(summary) == set(table)
    for key, values in table.items():
        values.sort()
        mean, mx, p95 = summary[key]
        assert mean == pytest.approx(math.fsum(values) / len(values), abs=5e-7)
        assert mx == pytest.approx(values[-1], abs=5e-7)
        assert p95 == pytest.approx(percentile_95(values), abs=5e-7)


def test_empty_collector_exports_header_only(tmp_path):
    col = collector()
    col.finalize(10.0)
    col.export_all(str(tmp_path))
    assert (tmp_path / "metrics.csv").read_text() == CSV_HEADER + "\n"
    assert (tmp_path / "summary.csv").read_text() == "class,metric,mean,max,p95\n"
    assert os.path.exists(tmp_path / "stats.json")


def test_wide_precision_only_for_variances():
    assert format_value("queue_delay_variation", 1e-9) == "0.000000001000"
    assert format_value("packet_delay_variation", 1e-9) == "0.000000001000"
    assert format_value("queuing_delay", 0.0123456789) == "0.012346"


def test_class_window_overrides_bucket_width():
    col = collector(class_window_s={"database": 5.0})
    col.record_queuing_delay("database", 0.001, now=2.0)
    col.record_queuing_delay("database", 0.002, now=4.0)
    col.record_queuing_delay("voice", 0.001, now=2.0)
    col.finalize(10.0)
    rows = [r for r in col.build_rows() if r[0] == "queue_delay_variation"]
    db = [r for r in rows if r[1] == "database"]
    assert [r[2] for r in db] == [5.0]  # both samples share one 5 s window
    assert db[0][3] == pytest.approx(delay_variation([0.001, 0.002]), rel=1e-12)
