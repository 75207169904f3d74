"""Result tables and their CSV / whitespace-delimited serialisation."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .. import __version__


@dataclass
class ResultTable:
    """Rows of one experiment plus the metadata needed to reproduce them.

    ``metadata`` is written as ``# key: value`` lines above the header.
    ``wall_time`` is kept out of the files so reruns are byte-identical.
    """

    experiment: str
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, table has {len(self.columns)} columns")
        self.rows.append(list(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **match) -> list[dict]:
        out = []
        for r in self.rows:
            d = dict(zip(self.columns, r))
            if all(d[k] == v for k, v in match.items()):
                out.append(d)
        return out

    def _header_lines(self) -> list[str]:
        meta = {"experiment": self.experiment, "build": f"vcsel-owc {__version__}"}
        meta.update(self.metadata)
        return [f"# {k}: {v}" for k, v in meta.items()]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self._header_lines():
            buf.write(line + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def to_dat(self) -> str:
        lines = self._header_lines() + ["# " + " ".join(self.columns)]
        lines += [" ".join(_fmt(v) for v in r) for r in self.rows]
        return "\n".join(lines) + "\n"

    def write(self, out_dir, dat: bool = False) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{self.experiment}.csv"]
        paths[0].write_text(self.to_csv(), encoding="utf-8")
        if dat:
            paths.append(out / f"{self.experiment}.dat")
            paths[1].write_text(self.to_dat(), encoding="utf-8")
        return paths


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return _fmt(v.item())
    return str(v)
