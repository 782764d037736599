import numpy as np
import pytest

from app.core.exceptions import BadMagic, InconsistentHeader, TruncatedFile
from eeg_glt_tools.edf_reader import (
    Annotation,
    FIXED_HEADER_BYTES,
    SIGNAL_HEADER_BYTES,
    parse_edf,
    parse_header,
    parse_tal_block,
    read_edf,
    write_edf,
)


def test_round_trip_keeps_samples_and_labels(edf_factory):
    digital, data = edf_factory(n_channels=3, n_records=4)
    rec = parse_edf(data)
    assert rec.header.n_signals == 3
    assert rec.header.n_records == 4
    assert rec.header.header_bytes == FIXED_HEADER_BYTES + 3 * SIGNAL_HEADER_BYTES
    assert not rec.header.is_edf_plus
    assert rec.channel_names == ["FC5", "FC3", "FC1"]
    assert rec.sample_rate() == 160.0
    np.testing.assert_array_equal(rec.data_matrix(), digital.astype(np.float64))


def test_physical_scaling_uses_header_ranges():
    digital = np.array([[-32768, 0, 32767]], dtype=np.int16)
    rec = parse_edf(write_edf(["Cz.."], digital, 3, physical_range=(-100.0, 100.0)))
    signal = rec.signals[0]
    assert signal.gain == pytest.approx(200 / 65535)
    np.testing.assert_allclose(rec.data_matrix()[0, [0, 2]], [-100.0, 100.0])


def test_annotations_round_trip(edf_factory, motor_annotations):
    _, data = edf_factory(n_channels=2, n_records=20, annotations=motor_annotations)
    rec = parse_edf(data)
    assert rec.header.is_edf_plus
    assert len(rec.data_signals) == 2
    assert [(a.onset_s, a.text) for a in rec.annotations] == [(0.0, "T0"), (4.0, "T1"), (8.0, "T0"), (12.0, "T2")]
    assert all(a.duration_s == 4.0 for a in rec.annotations)
    assert rec.data_matrix().shape == (2, 20 * 160)


def test_parse_tal_block():
    events = parse_tal_block(b"+0\x14\x14\x00+1.0\x14T1\x14\x00\x00\x00")
    assert events == [Annotation(onset_s=1.0, duration_s=0.0, text="T1")]
    events = parse_tal_block(b"+12.5\x154.1\x14T2\x14\x00")
    assert events == [Annotation(onset_s=12.5, duration_s=4.1, text="T2")]
    with pytest.raises(InconsistentHeader):
        parse_tal_block(b"+abc\x14T1\x14\x00")


def test_signal_count_disagreeing_with_header_bytes(edf_factory):
    _, data = edf_factory(n_channels=2)
    patched = data[:252] + b"3   " + data[256:]
    with pytest.raises(InconsistentHeader):
        parse_edf(patched)


def test_short_files_are_truncated(edf_factory):
    _, data = edf_factory(n_channels=2)
    with pytest.raises(TruncatedFile):
        parse_header(data[:100])
    with pytest.raises(TruncatedFile):
        parse_edf(data[:FIXED_HEADER_BYTES + 10])
    with pytest.raises(TruncatedFile):
        parse_edf(data[:-10])


def test_trailing_bytes_are_inconsistent(edf_factory):
    _, data = edf_factory(n_channels=2)
    with pytest.raises(InconsistentHeader):
        parse_edf(data + b"\x00\x00")


def test_bad_version_field(edf_factory):
    _, data = edf_factory(n_channels=1)
    with pytest.raises(BadMagic):
        parse_edf(b"1       " + data[8:])


def test_unknown_record_count_is_inferred(edf_factory):
    digital, data = edf_factory(n_channels=2, n_records=3)
    patched = data[:236] + b"-1      " + data[244:]
    rec = parse_edf(patched)
    np.testing.assert_array_equal(rec.data_matrix(), digital)


def test_read_edf_from_disk(edf_factory, tmp_path):
    digital, data = edf_factory(n_channels=2)
    path = tmp_path / "S001R04.edf"
    path.write_bytes(data)
    np.testing.assert_array_equal(read_edf(path).data_matrix(), digital)


def test_writer_rejects_partial_records():
    with pytest.raises(InconsistentHeader):
        write_edf(["Cz"], np.zeros((1, 10), dtype=np.int16), 3)
