"""Embedding TSV files, digests and atomic writes."""
import hashlib
import os
import tempfile

import numpy as np


class EmbeddingFileError(ValueError):
    pass


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_text(path, text):
    """Write ``text`` to a sibling temp file, then rename it over ``path``."""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_embedding(node_ids, pair):
    """TSV text: ``node``, ``f_1..f_K``, ``fhat_1..fhat_K``; floats in
    shortest round-trip form."""
    K = pair.K
    header = ["node"] + [f"f_{i}" for i in range(1, K + 1)] + [f"fhat_{i}" for i in range(1, K + 1)]
    lines = ["\t".join(header)]
    rows = pair.concat()
    for nid, row in zip(node_ids, rows):
        lines.append("\t".join([str(nid)] + [repr(float(x)) for x in row]))
    return "\n".join(lines) + "\n"


def write_embedding(path, node_ids, pair):
    atomic_write_text(path, format_embedding(node_ids, pair))


def read_embedding(path):
    """Returns ``(node_ids, F, F_hat)``."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise EmbeddingFileError(f"cannot read embedding file {path}: {exc.strerror}") from None
    with fh:
        header = fh.readline().rstrip("\n").split("\t")
        if len(header) < 3 or header[0] != "node" or (len(header) - 1) % 2:
            raise EmbeddingFileError(f"{path}:1: expected header 'node, f_1..f_K, fhat_1..fhat_K'")
        K = (len(header) - 1) // 2
        ids, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2 * K + 1:
                raise EmbeddingFileError(f"{path}:{lineno}: expected {2 * K + 1} fields, got {len(parts)}")
            try:
                rows.append([float(x) for x in parts[1:]])
            except ValueError:
                raise EmbeddingFileError(f"{path}:{lineno}: non-numeric value") from None
            ids.append(parts[0])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), 2 * K)
    if not np.all(np.isfinite(X)):
        raise EmbeddingFileError(f"{path}: non-finite embedding values")
    return ids, X[:, :K], X[:, K:]
