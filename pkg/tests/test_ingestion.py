import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvcs.errors import FormatError
from cvcs.ingestion import (BsmRecord, parse_bsm_csv, read_traces, segment_trips, traces_to_records,
                            write_traces)

HEADER = b"device_id,timestamp,speed_mps\n"


class TestParse:
    def test_empty_file(self):
        assert parse_bsm_csv(b"") == ([], [])

    def test_header_only(self):
        assert parse_bsm_csv(HEADER) == ([], [])

    def test_rows_preserved(self):
        data = HEADER + b"a,100.0,1.5\nb,100.1,0\na,100.2,12.25\n"
        records, issues = parse_bsm_csv(io.BytesIO(data))
        assert issues == []
        assert records == [BsmRecord("a", 100.0, 1.5), BsmRecord("b", 100.1, 0.0), BsmRecord("a", 100.2, 12.25)]

    def test_text_stream(self):
        records, _ = parse_bsm_csv(io.StringIO(HEADER.decode() + "a,1,2\n"))
        assert records == [BsmRecord("a", 1.0, 2.0)]

    def test_bad_rows_reported_and_skipped(self):
        data = HEADER + b"a,1.0,5\na,1.1,-2\na,x,3\n,1.3,1\na,1.4\na,inf,1\na,1.6,nan\na,1.7,4\n"
        records, issues = parse_bsm_csv(data)
        assert [r.timestamp for r in records] == [1.0, 1.7]
        assert [i.line for i in issues] == [3, 4, 5, 6, 7, 8]
        assert "speed" in issues[0].message

    def test_missing_header(self):
        with pytest.raises(FormatError):
            parse_bsm_csv(b"a,1.0,5\n")


def _records(device, start, count, period=0.1):
    return [BsmRecord(device, start + k * period, float(k)) for k in range(count)]


class TestSegment:
    def test_single_trip(self):
        traces = segment_trips(_records("d", 1000.0, 100))
        assert len(traces) == 1 and len(traces[0]) == 100
        assert traces[0].trip_id == "d#0" and traces[0].start_time == 1000.0

    def test_gap_splits(self):
        recs = _records("d", 0.0, 50) + _records("d", 5.9, 50)
        traces = segment_trips(recs)
        assert [len(t) for t in traces] == [50, 50]
        assert [t.trip_id for t in traces] == ["d#0", "d#1"]

    def test_jitter_tolerated(self):
        ts = np.arange(30) * 0.1 + np.tile([0.0, 0.01, -0.01], 10)
        recs = [BsmRecord("d", float(t), 1.0) for t in ts]
        assert len(segment_trips(recs)) == 1

    def test_devices_separate(self):
        recs = _records("a", 0.0, 10) + _records("b", 0.0, 5)
        traces = segment_trips(recs)
        assert [(t.device_id, len(t)) for t in traces] == [("a", 10), ("b", 5)]

    def test_single_record_trip(self):
        assert len(segment_trips([BsmRecord("d", 3.0, 2.0)])[0]) == 1

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from("abc"), st.integers(1, 30), st.sampled_from([0.1, 0.5, 3.0])),
                    min_size=1, max_size=8))
    def test_order_preserving(self, runs):
        recs, clock = [], {}
        for dev, count, gap in runs:
            start = clock.get(dev, 0.0) + gap
            for k in range(count):
                recs.append(BsmRecord(dev, start + 0.1 * k, float(len(recs))))
            clock[dev] = start + 0.1 * (count - 1)
        traces = segment_trips(recs)
        for dev in "abc":
            got = np.concatenate([t.speeds for t in traces if t.device_id == dev] or [np.empty(0)])
            want = [r.speed_mps for r in recs if r.device_id == dev]
            np.testing.assert_array_equal(got, want)


class TestTraceFiles:
    def test_round_trip(self, small_traces):
        buf = io.StringIO()
        write_traces(small_traces, buf)
        again = read_traces(io.StringIO(buf.getvalue()))
        assert len(again) == len(small_traces)
        for a, b in zip(small_traces, again):
            assert (a.trip_id, a.device_id, a.start_time, a.sample_rate_hz) == \
                (b.trip_id, b.device_id, b.start_time, b.sample_rate_hz)
            np.testing.assert_array_equal(a.speeds, b.speeds)
        buf2 = io.StringIO()
        write_traces(again, buf2)
        assert buf2.getvalue() == buf.getvalue()

    def test_bad_header(self):
        with pytest.raises(FormatError):
            read_traces(io.StringIO("x,y\n"))

    def test_bad_row(self):
        with pytest.raises(FormatError, match="line 2"):
            read_traces(io.StringIO("trip_id,device_id,timestamp,speed_mps\nt,d,zz,1\n"))

    def test_stalled_timestamps(self):
        with pytest.raises(FormatError, match="advance"):
            read_traces(io.StringIO("trip_id,device_id,timestamp,speed_mps\nt,d,5.0,1\nt,d,5.0,2\n"))

    def test_records_round_trip(self, small_traces):
        again = segment_trips(traces_to_records(small_traces))
        assert [t.trip_id for t in again] == [t.trip_id for t in small_traces]
        for a, b in zip(small_traces, again):
            np.testing.assert_array_equal(a.speeds, b.speeds)
