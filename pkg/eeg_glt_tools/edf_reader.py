# eeg_glt_tools/edf_reader.py
"""
EDF / EDF+ reading from bytes, plus a small writer used to build fixtures.

Layout: a 256-byte fixed header, then 256 bytes of per-signal fields (stored field by
field across all signals), then ``n_records`` data records. Each record holds
``samples_per_record[i]`` little-endian int16 values for every signal in turn. An
"EDF Annotations" signal carries EDF+ time-stamped annotation lists (TALs) instead of
samples.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import BadMagic, InconsistentHeader, TruncatedFile
from eeg_glt_tools.graph_core import normalize_channel_name

logger = logging.getLogger(__name__)

FIXED_HEADER_BYTES = 256
SIGNAL_HEADER_BYTES = 256
ANNOTATION_LABEL = "EDF Annotations"

# (name, width) of every per-signal field, in file order.
_SIGNAL_FIELDS = (
    ("label", 16),
    ("transducer", 80),
    ("physical_dimension", 8),
    ("physical_min", 8),
    ("physical_max", 8),
    ("digital_min", 8),
    ("digital_max", 8),
    ("prefiltering", 80),
    ("samples_per_record", 8),
    ("reserved", 32),
)


@dataclass(frozen=True)
class EdfHeader:
    version: str
    patient_id: str
    recording_id: str
    start_date: str
    start_time: str
    header_bytes: int
    reserved: str
    n_records: int
    record_duration_s: float
    n_signals: int

    @property
    def is_edf_plus(self) -> bool:
        return self.reserved.startswith("EDF+")


@dataclass
class EdfSignal:
    label: str
    physical_min: float
    physical_max: float
    digital_min: int
    digital_max: int
    samples_per_record: int
    physical_dimension: str = ""
    transducer: str = ""
    prefiltering: str = ""
    digital: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int16))

    @property
    def gain(self) -> float:
        return (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min)

    @property
    def physical(self) -> np.ndarray:
        """Affine digital -> physical conversion from the header ranges."""
        return (self.digital.astype(np.float64) - self.digital_min) * self.gain + self.physical_min

    @property
    def is_annotation(self) -> bool:
        return self.label == ANNOTATION_LABEL


@dataclass(frozen=True)
class Annotation:
    onset_s: float
    duration_s: float
    text: str


@dataclass
class EdfRecording:
    header: EdfHeader
    signals: List[EdfSignal]
    annotations: List[Annotation] = field(default_factory=list)

    @property
    def data_signals(self) -> List[EdfSignal]:
        return [s for s in self.signals if not s.is_annotation]

    @property
    def channel_names(self) -> List[str]:
        return [normalize_channel_name(s.label) for s in self.data_signals]

    def sample_rate(self, index: int = 0) -> float:
        return self.data_signals[index].samples_per_record / self.header.record_duration_s

    def data_matrix(self) -> np.ndarray:
        """Physical samples of every non-annotation signal, channels x time."""
        signals = self.data_signals
        if not signals:
            return np.zeros((0, 0))
        lengths = {len(s.digital) for s in signals}
        if len(lengths) != 1:
            raise InconsistentHeader("Data signals have different sample rates; cannot stack them.")
        return np.vstack([s.physical for s in signals])


def _ascii(raw: bytes) -> str:
    return raw.decode("ascii", errors="replace").strip()


def _number(raw: bytes, cast, what: str):
    text = _ascii(raw)
    try:
        return cast(text)
    except ValueError:
        raise InconsistentHeader(f"Header field '{what}' is not a number: {text!r}.")


def parse_header(data: bytes) -> EdfHeader:
    if len(data) < FIXED_HEADER_BYTES:
        raise TruncatedFile(f"EDF needs at least {FIXED_HEADER_BYTES} header bytes, got {len(data)}.")
    version = data[0:8].decode("ascii", errors="replace")
    if version.strip() != "0":
        raise BadMagic(f"EDF version field must be '0', got {version!r}.")
    return EdfHeader(
        version=version.strip(),
        patient_id=_ascii(data[8:88]),
        recording_id=_ascii(data[88:168]),
        start_date=_ascii(data[168:176]),
        start_time=_ascii(data[176:184]),
        header_bytes=_number(data[184:192], int, "header bytes"),
        reserved=_ascii(data[192:236]),
        n_records=_number(data[236:244], int, "number of records"),
        record_duration_s=_number(data[244:252], float, "record duration"),
        n_signals=_number(data[252:256], int, "number of signals"),
    )


def _parse_signal_headers(data: bytes, n_signals: int) -> List[EdfSignal]:
    offset = FIXED_HEADER_BYTES
    columns = {}
    for name, width in _SIGNAL_FIELDS:
        columns[name] = [data[offset + i * width: offset + (i + 1) * width] for i in range(n_signals)]
        offset += width * n_signals

    signals = []
    for i in range(n_signals):
        signal = EdfSignal(
            label=_ascii(columns["label"][i]),
            transducer=_ascii(columns["transducer"][i]),
            physical_dimension=_ascii(columns["physical_dimension"][i]),
            physical_min=_number(columns["physical_min"][i], float, "physical minimum"),
            physical_max=_number(columns["physical_max"][i], float, "physical maximum"),
            digital_min=_number(columns["digital_min"][i], int, "digital minimum"),
            digital_max=_number(columns["digital_max"][i], int, "digital maximum"),
            prefiltering=_ascii(columns["prefiltering"][i]),
            samples_per_record=_number(columns["samples_per_record"][i], int, "samples per record"),
        )
        if signal.samples_per_record < 1:
            raise InconsistentHeader(f"Signal '{signal.label}' declares {signal.samples_per_record} samples per record.")
        if signal.digital_max == signal.digital_min and not signal.is_annotation:
            raise InconsistentHeader(f"Signal '{signal.label}' has an empty digital range.")
        signals.append(signal)
    return signals


def parse_tal_block(raw: bytes) -> List[Annotation]:
    """
    Decodes one record of an annotation signal. Each TAL is
    ``+onset[\\x15duration]\\x14text\\x14[text\\x14...]\\x00``; the first TAL of a
    record only keeps time and carries no text.
    """
    events = []
    for tal in raw.split(b"\x00"):
        if not tal.strip(b"\x00"):
            continue
        parts = tal.split(b"\x14")
        stamp = parts[0].decode("latin-1")
        onset_text, _, duration_text = stamp.partition("\x15")
        try:
            onset = float(onset_text)
            duration = float(duration_text) if duration_text else 0.0
        except ValueError:
            raise InconsistentHeader(f"Malformed annotation time stamp {stamp!r}.")
        for text in parts[1:]:
            label = text.decode("utf-8", errors="replace")
            if label:
                events.append(Annotation(onset_s=onset, duration_s=duration, text=label))
    return events


def parse_edf(data: bytes) -> EdfRecording:
    """Parses a complete EDF/EDF+ file held in memory."""
    header = parse_header(data)
    expected_header = FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * header.n_signals
    if header.n_signals < 1:
        raise InconsistentHeader(f"File declares {header.n_signals} signals.")
    if header.header_bytes != expected_header:
        raise InconsistentHeader(
            f"Header declares {header.header_bytes} bytes but {header.n_signals} signals need {expected_header}."
        )
    if len(data) < expected_header:
        raise TruncatedFile(f"File ends inside the signal headers ({len(data)} < {expected_header} bytes).")

    signals = _parse_signal_headers(data, header.n_signals)
    record_samples = sum(s.samples_per_record for s in signals)
    record_bytes = 2 * record_samples
    payload = data[expected_header:]

    n_records = header.n_records
    if n_records < 0:
        # -1 means "unknown" while recording; infer from the payload.
        n_records = len(payload) // record_bytes
    if len(payload) < n_records * record_bytes:
        raise TruncatedFile(
            f"Header declares {n_records} records of {record_bytes} bytes; only {len(payload)} bytes follow."
        )
    if len(payload) != n_records * record_bytes:
        raise InconsistentHeader(
            f"{len(payload) - n_records * record_bytes} trailing bytes after {n_records} records."
        )

    records = np.frombuffer(payload, dtype="<i2").reshape(n_records, record_samples)
    annotations: List[Annotation] = []
    start = 0
    for signal in signals:
        block = records[:, start:start + signal.samples_per_record]
        start += signal.samples_per_record
        if signal.is_annotation:
            for row in block:
                annotations.extend(parse_tal_block(row.astype("<i2").tobytes()))
        else:
            signal.digital = block.reshape(-1).astype(np.int16)

    logger.debug("Parsed EDF with %d signals, %d records, %d annotations.",
                 header.n_signals, n_records, len(annotations))
    return EdfRecording(header=header, signals=signals, annotations=annotations)


def read_edf(path) -> EdfRecording:
    with open(path, "rb") as handle:
        return parse_edf(handle.read())


# --- Writer ---

def _field(value, width: int) -> bytes:
    text = str(value)
    if len(text) > width:
        raise InconsistentHeader(f"Value {text!r} does not fit an EDF field of {width} characters.")
    return text.ljust(width).encode("ascii")


def _format_number(value: float, width: int = 8) -> str:
    text = repr(float(value)) if not float(value).is_integer() else str(int(value))
    return text[:width]


def _tal_bytes(record_index: int, duration: float, events: Sequence[Annotation]) -> bytes:
    out = f"+{_format_number(record_index * duration, 16)}\x14\x14\x00".encode("latin-1")
    for event in events:
        stamp = f"+{_format_number(event.onset_s, 16)}"
        if event.duration_s:
            stamp += f"\x15{_format_number(event.duration_s, 16)}"
        out += stamp.encode("latin-1") + b"\x14" + event.text.encode("utf-8") + b"\x14\x00"
    return out


def write_edf(
        labels: Sequence[str],
        digital: np.ndarray,
        samples_per_record: int,
        physical_range: Tuple[float, float] = (-32768.0, 32767.0),
        digital_range: Tuple[int, int] = (-32768, 32767),
        record_duration_s: float = 1.0,
        annotations: Optional[Sequence[Annotation]] = None,
) -> bytes:
    """
    Serializes channels x samples int16 data into an EDF (or EDF+ when annotations
    are given) file. Every channel shares one sample rate; annotations go into
    the record that contains their onset.
    """
    digital = np.asarray(digital)
    if digital.ndim != 2 or digital.shape[0] != len(labels):
        raise InconsistentHeader(f"Need one row per label; got data of shape {digital.shape}.")
    if digital.shape[1] % samples_per_record:
        raise InconsistentHeader("Sample count must be a whole number of records.")
    n_records = digital.shape[1] // samples_per_record

    tal_records: List[bytes] = []
    if annotations is not None:
        per_record: List[List[Annotation]] = [[] for _ in range(n_records)]
        for event in annotations:
            index = min(int(event.onset_s // record_duration_s), n_records - 1)
            per_record[index].append(event)
        tal_records = [_tal_bytes(i, record_duration_s, per_record[i]) for i in range(n_records)]
    tal_samples = max((math.ceil(len(t) / 2) for t in tal_records), default=0)

    rows = [dict(label=label, transducer="", physical_dimension="uV",
                 physical_min=_format_number(physical_range[0]), physical_max=_format_number(physical_range[1]),
                 digital_min=digital_range[0], digital_max=digital_range[1],
                 prefiltering="", samples_per_record=samples_per_record, reserved="")
            for label in labels]
    if annotations is not None:
        rows.append(dict(label=ANNOTATION_LABEL, transducer="", physical_dimension="",
                         physical_min=-1, physical_max=1, digital_min=-32768, digital_max=32767,
                         prefiltering="", samples_per_record=tal_samples, reserved=""))

    n_signals = len(rows)
    header = b"".join([
        _field("0", 8), _field("X X X X", 80), _field("Startdate X X X X", 80),
        _field("01.01.09", 8), _field("00.00.00", 8),
        _field(FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * n_signals, 8),
        _field("EDF+C" if annotations is not None else "", 44),
        _field(n_records, 8), _field(_format_number(record_duration_s), 8), _field(n_signals, 4),
    ])
    for name, width in _SIGNAL_FIELDS:
        header += b"".join(_field(row[name], width) for row in rows)

    body = []
    as_int16 = digital.astype("<i2")
    for r in range(n_records):
        body.append(as_int16[:, r * samples_per_record:(r + 1) * samples_per_record].tobytes())
        if annotations is not None:
            body.append(tal_records[r].ljust(2 * tal_samples, b"\x00"))
    return header + b"".join(body)
