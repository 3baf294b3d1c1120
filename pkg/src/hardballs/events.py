"""Collision records shared by the cone and ball engines."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np


def fmt_number(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


@dataclass(frozen=True)
class EventRecord:
    time: object
    index: object  # wall number or (i, j) ball pair, 1-based
    position: tuple
    velocity_pre: tuple
    velocity_post: tuple


@dataclass
class EventLog:
    records: list = field(default_factory=list)

    def append(self, record: EventRecord) -> None:
        if self.records and not record.time > self.records[-1].time:
            raise ValueError("event times must strictly increase")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, k):
        return self.records[k]

    def times(self) -> list:
        return [r.time for r in self.records]

    def indices(self) -> list:
        return [r.index for r in self.records]

    def to_json(self, fmt=fmt_number) -> list:
        out = []
        for r in self.records:
            out.append({
                "t": fmt(r.time),
                "index": list(r.index) if isinstance(r.index, tuple) else r.index,
                "position": [fmt(x) for x in r.position],
                "velocity_pre": [fmt(x) for x in r.velocity_pre],
                "velocity_post": [fmt(x) for x in r.velocity_post],
            })
        return out

    @classmethod
    def from_json(cls, data: list, parse=float) -> "EventLog":
        log = cls()
        for r in data:
            idx = tuple(r["index"]) if isinstance(r["index"], list) else r["index"]
            log.append(EventRecord(parse(r["t"]), idx, tuple(map(parse, r["position"])),
                                   tuple(map(parse, r["velocity_pre"])),
                                   tuple(map(parse, r["velocity_post"]))))
        return log

    def to_csv(self, fmt=fmt_number) -> str:
        return csv_from_json(self.to_json(fmt))


def csv_from_json(data: list) -> str:
    """CSV rows for JSON event records, copying the number text unchanged."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    if not data:
        writer.writerow(["t", "index"])
        return buf.getvalue()
    dim = len(data[0]["position"])
    writer.writerow(
        ["t", "index"]
        + [f"position_{k + 1}" for k in range(dim)]
        + [f"velocity_pre_{k + 1}" for k in range(dim)]
        + [f"velocity_post_{k + 1}" for k in range(dim)]
    )
    for r in data:
        idx = "-".join(map(str, r["index"])) if isinstance(r["index"], list) else r["index"]
        writer.writerow([r["t"], idx, *r["position"], *r["velocity_pre"], *r["velocity_post"]])
    return buf.getvalue()
