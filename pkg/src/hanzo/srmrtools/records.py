"""JSON-lines record streams and the dataset manifest record."""

import json
import math
import os
from dataclasses import asdict, dataclass

from hanzo.srmrtools.errors import ManifestError
from hanzo.srmrtools.room import DIRECT_ONLY, format_drr, parse_drr

CLEAN = "clean"


@dataclass(frozen=True)
class ManifestRecord:
    """One synthesized utterance and its ground truth.

    ``audio_path`` is relative to the manifest's directory unless
    absolute. ``snr_db`` is None for the clean copy.
    """

    audio_path: str
    utterance_id: str
    rir_id: str
    true_rt60_s: float
    true_drr_db: float
    noise_type: str = CLEAN
    snr_db: float | None = None
    channels: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestRecord":
        missing = [k for k in ("audio_path", "rir_id", "true_rt60_s", "true_drr_db") if k not in d]
        if missing:
            raise ManifestError(f"missing fields: {', '.join(missing)}")
        try:
            return cls(
                audio_path=str(d["audio_path"]),
                utterance_id=str(d.get("utterance_id", d["audio_path"])),
                rir_id=str(d["rir_id"]),
                true_rt60_s=float(d["true_rt60_s"]),
                true_drr_db=parse_drr(d["true_drr_db"]),
                noise_type=str(d.get("noise_type") or CLEAN),
                snr_db=None if d.get("snr_db") is None else float(d["snr_db"]),
                channels=int(d.get("channels", 1)),
            )
        except (TypeError, ValueError) as e:
            raise ManifestError(f"bad field value: {e}") from e

    def to_dict(self) -> dict:
        d = asdict(self)
        d["true_drr_db"] = format_drr(self.true_drr_db)
        return d

    def validate(self) -> list:
        """Return a list of (field, problem) tuples, empty when the record is usable."""
        errors = []
        if not self.audio_path:
            errors.append(("audio_path", "empty"))
        if not (math.isfinite(self.true_rt60_s) and self.true_rt60_s > 0):
            errors.append(("true_rt60_s", f"must be positive, got {self.true_rt60_s}"))
        if math.isnan(self.true_drr_db) or self.true_drr_db == -math.inf:
            errors.append(("true_drr_db", f"not a ratio: {self.true_drr_db}"))
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            errors.append(("snr_db", f"not finite: {self.snr_db}"))
        if self.channels < 1:
            errors.append(("channels", f"must be at least 1, got {self.channels}"))
        return errors

    @property
    def direct_only(self) -> bool:
        return self.true_drr_db == DIRECT_ONLY

    def resolve(self, base_dir) -> str:
        return os.path.join(base_dir, self.audio_path) if base_dir else self.audio_path


class RecordStream:
    """A stream of JSON-lines records. Iterate over it, or use
    read_records for offsets and per-record errors.
    """

    def __init__(self, file_handle, record_class=ManifestRecord, name=None):
        self.fh = file_handle
        self.record_class = record_class
        self.name = name

    def read_records(self, limit=None, offsets=True):
        """Yield a tuple of (offset, record, errors) for each line.

        Record is None when errors is non-empty. Reading carries on past
        bad lines and stops at end of file.
        """
        nrecords = 0
        while limit is None or nrecords < limit:
            offset = self.fh.tell() if offsets else None
            line = self.fh.readline()
            if not line:
                break
            if not line.strip():
                continue
            nrecords += 1
            record, errors = self._parse(line)
            yield (offset, record, errors)

    def _parse(self, line):
        try:
            d = json.loads(line)
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            return None, [("json", str(e))]
        if not isinstance(d, dict):
            return None, [("json", "record is not an object")]
        try:
            record = self.record_class.from_dict(d)
        except ManifestError as e:
            return None, [("record", str(e))]
        errors = record.validate()
        if errors:
            return None, errors
        return record, []

    def __iter__(self):
        for offset, record, errors in self.read_records(offsets=True):
            if errors:
                error_str = ",".join(str(error) for error in errors)
                raise ManifestError(f"{self.name or 'stream'}:{offset}: {error_str}")
            yield record

    def close(self):
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_record_stream(filename, record_class=ManifestRecord) -> RecordStream:
    try:
        fh = open(filename, "rb")
    except OSError as e:
        raise ManifestError(f"cannot open {filename}: {e}") from e
    return RecordStream(fh, record_class, name=str(filename))


def read_manifest(path) -> list[ManifestRecord]:
    """All records of a manifest; raises ManifestError on the first bad one."""
    with open_record_stream(path) as stream:
        return list(stream)


def write_manifest(path, records) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(dumps(record.to_dict()))
            fh.write("\n")


def dumps(obj) -> str:
    """One JSON line; non-finite floats are not valid JSON and are refused."""
    return json.dumps(obj, allow_nan=False)
