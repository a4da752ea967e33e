"""Text ingestion and file formats.

Formats (all UTF-8, ``\\n`` line endings, stable ordering):

* FoF CSV: header ``size,count`` then one row per positive entry;
* posterior FoF CSV: ``size,mean_count``;
* counts TSV: ``term<TAB>count`` without header;
* assignment file: whitespace-separated integer labels;
* trace CSV: ``iter,gamma0,a,p,l,log_ecpf``;
* plot TSV: ``ln_i<TAB>ln_m<TAB>fitted_head<TAB>fitted_tail``.
"""
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .partitions import ClusterAssignment, FoFVector

__all__ = [
    "ParseError",
    "CorpusCounts",
    "tokenize",
    "counts_to_assignment",
    "format_fof",
    "parse_fof",
    "read_fof",
    "write_fof",
    "read_counts",
    "write_counts",
    "read_assignment",
    "write_assignment",
    "write_trace",
    "read_trace",
    "write_posterior",
    "read_posterior",
    "read_prediction",
    "write_plot",
]

# runs of letters/digits, optionally joined by inner apostrophes
_TOKEN = re.compile(r"[^\W_]+(?:['’][^\W_]+)*")


class ParseError(ValueError):
    def __init__(self, source, line, msg):
        super().__init__(f"{source}:{line}: {msg}")
        self.source = source
        self.line = line


@dataclass(frozen=True)
class CorpusCounts:
    """Term counts in first-appearance order."""

    counts: dict

    @property
    def n(self):
        return sum(self.counts.values())

    @property
    def l(self):
        return len(self.counts)

    def fof(self):
        return FoFVector.from_sizes(list(self.counts.values()))


def tokenize(text):
    """Lowercase word counts; ``bytes`` input must be valid UTF-8."""
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8")
    words = _TOKEN.findall(text.lower())
    return CorpusCounts(dict(Counter(w.replace("’", "'") for w in words)))


def counts_to_assignment(counts):
    """Blocks of labels in term order: counts ``{x: 2, y: 1}`` -> ``1 1 2``."""
    if isinstance(counts, CorpusCounts):
        counts = counts.counts
    values = list(counts.values()) if hasattr(counts, "values") else list(counts)
    return ClusterAssignment.from_sizes(np.asarray(values, dtype=np.int64))


def _rows(text, source, header):
    lines = text.splitlines()
    if not lines or lines[0].strip() != header:
        raise ParseError(source, 1, f"expected header {header!r}")
    for no, line in enumerate(lines[1:], start=2):
        if line.strip():
            yield no, line


def format_fof(fof):
    return "size,count\n" + "".join(f"{k},{v}\n" for k, v in fof.items())


def parse_fof(text, source="<fof>"):
    counts = {}
    for no, line in _rows(text, source, "size,count"):
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(source, no, "expected two comma-separated fields")
        try:
            size, count = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(source, no, f"non-integer field in {line!r}") from None
        if size < 1 or count < 0:
            raise ParseError(source, no, "size must be >= 1 and count >= 0")
        if size in counts:
            raise ParseError(source, no, f"duplicate size {size}")
        counts[size] = count
    return FoFVector(counts)


def _read(path):
    with open(path, "rb") as fh:
        return fh.read().decode("utf-8")


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_fof(path):
    return parse_fof(_read(path), str(path))


def write_fof(fof, path):
    _write(path, format_fof(fof))


def read_counts(path):
    counts = {}
    for no, line in enumerate(_read(path).splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(path, no, "expected term<TAB>count")
        try:
            c = int(parts[1])
        except ValueError:
            raise ParseError(path, no, f"bad count {parts[1]!r}") from None
        if c < 1:
            raise ParseError(path, no, "counts must be >= 1")
        counts[parts[0]] = counts.get(parts[0], 0) + c
    return CorpusCounts(counts)


def write_counts(counts, path):
    _write(path, "".join(f"{t}\t{c}\n" for t, c in counts.counts.items()))


def read_assignment(path):
    text = _read(path)
    labels = []
    for no, line in enumerate(text.splitlines(), start=1):
        for tok in line.split():
            try:
                labels.append(int(tok))
            except ValueError:
                raise ParseError(path, no, f"bad label {tok!r}") from None
    if not labels:
        raise ParseError(path, 1, "empty assignment")
    return ClusterAssignment(labels)


def write_assignment(assign, path):
    _write(path, "\n".join(map(str, assign.labels.tolist())) + "\n")


def _g(x):
    return repr(float(x))


def write_trace(trace, path):
    lines = ["iter,gamma0,a,p,l,log_ecpf"]
    for it in range(len(trace)):
        lines.append(",".join([str(it), _g(trace.gamma0[it]), _g(trace.a[it]), _g(trace.p[it]),
                               str(int(trace.l[it])), _g(trace.log_ecpf[it])]))
    _write(path, "\n".join(lines) + "\n")


def read_trace(path):
    """Trace CSV -> dict of column arrays."""
    cols = ["iter", "gamma0", "a", "p", "l", "log_ecpf"]
    data = {c: [] for c in cols}
    for no, line in _rows(_read(path), path, ",".join(cols)):
        parts = line.split(",")
        if len(parts) != len(cols):
            raise ParseError(path, no, "wrong number of fields")
        try:
            for c, v in zip(cols, parts):
                data[c].append(float(v))
        except ValueError:
            raise ParseError(path, no, f"bad number in {line!r}") from None
    return {c: np.array(v) for c, v in data.items()}


def write_posterior(post, path):
    mean = post.mean
    rows = (f"{i},{_g(mean[i])}\n" for i in np.nonzero(mean)[0] if i > 0)
    _write(path, "size,mean_count\n" + "".join(rows))


def read_posterior(path):
    out = {}
    for no, line in _rows(_read(path), path, "size,mean_count"):
        try:
            k, v = line.split(",")
            out[int(k)] = float(v)
        except ValueError:
            raise ParseError(path, no, f"bad row {line!r}") from None
    return out


def read_prediction(path):
    """FoF-like file with either count header; values may be real."""
    text = _read(path)
    first = text.splitlines()[0].strip() if text else ""
    if first == "size,count":
        return dict(parse_fof(text, path))
    return read_posterior(path)


def write_plot(rows, path):
    lines = ["ln_i\tln_m\tfitted_head\tfitted_tail"]
    lines += ["\t".join(_g(v) for v in row) for row in rows]
    _write(path, "\n".join(lines) + "\n")
