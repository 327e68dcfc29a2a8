"""Content-addressed on-disk cache for truncated complexes.

An entry lives at <dir>/<h[:2]>/<h>.cgc where h is the sha256 of its key.
The file is plain text:

    confgraph-cache 1
    key <key>
    sha256 <digest of the body>
    <body>

and the body lists the basis as graph literals and every differential in
the sparse-matrix dump format.  Writers go through a temporary file and
os.replace, so concurrent writers of the same entry are harmless.
"""

from __future__ import annotations

import hashlib
import os
import tempfile

from .graphs import canonical_form, literal, parse_literal
from .linalg import SparseMatrix

MAGIC = "confgraph-cache 1"
SUFFIX = ".cgc"
ENV_VAR = "CONFGRAPH_CACHE_DIR"


class IoError(OSError):
    pass


def default_dir():
    d = os.environ.get(ENV_VAR)
    if d:
        return d
    return os.path.join(os.path.expanduser("~"), ".cache", "confgraph")


def _digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Cache:
    def __init__(self, root):
        self.root = str(root)
        self.hits = 0
        self.misses = 0

    def path(self, key):
        h = _digest(key)
        return os.path.join(self.root, h[:2], h + SUFFIX)

    # raw entries

    def get(self, key):
        p = self.path(key)
        try:
            with open(p, encoding="utf-8") as fh:
                text = fh.read()
        except FileNotFoundError:
            self.misses += 1
            return None
        body = _verified_body(text, key)
        if body is None:
            _remove(p)
            self.misses += 1
            return None
        self.hits += 1
        return body

    def put(self, key, body):
        if "\n" in key:
            raise ValueError("cache keys are single lines")
        p = self.path(key)
        d = os.path.dirname(p)
        try:
            os.makedirs(d, exist_ok=True)
            fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(f"{MAGIC}\nkey {key}\nsha256 {_digest(body)}\n{body}")
            os.replace(tmp, p)
        except OSError as e:
            raise IoError(f"cannot write cache entry {p}: {e}") from e

    # complexes

    def store_complex(self, key, basis, diffs, leaked):
        lines = []
        for p in sorted(basis):
            lines.append(f"degree {p} {len(basis[p])}")
            lines.extend(literal(g) for g in basis[p])
        for p in sorted(diffs):
            lines.append(f"leaked {p} {leaked.get(p, 0)}")
            lines.append(f"matrix {p}")
            lines.append(diffs[p].dumps().rstrip("\n"))
        lines.append("end")
        self.put(key, "\n".join(lines) + "\n")

    def load_complex(self, key, flavor):
        body = self.get(key)
        if body is None:
            return None
        try:
            return _parse_complex(body, flavor)
        except (ValueError, KeyError, IndexError):
            _remove(self.path(key))
            return None


def _verified_body(text, key=None):
    head = text.split("\n", 3)
    if len(head) < 4 or head[0] != MAGIC:
        return None
    if not head[1].startswith("key ") or not head[2].startswith("sha256 "):
        return None
    if key is not None and head[1][4:] != key:
        return None
    body = head[3]
    if _digest(body) != head[2][7:]:
        return None
    return body


def _parse_complex(body, flavor):
    degrees = dict(flavor.algebra.basis) if flavor.algebra is not None else {}
    lines = body.split("\n")
    basis, diffs, leaked = {}, {}, {}
    i = 0
    while i < len(lines):
        ln = lines[i]
        if ln.startswith("degree "):
            _, p, cnt = ln.split()
            p, cnt = int(p), int(cnt)
            gs = []
            for t in range(cnt):
                g, _ = parse_literal(lines[i + 1 + t], degrees)
                r = canonical_form(g.D, g.n_ext, g.n_int, g.edges, g.decs)
                if r is None or r[0] != 1 or r[1] != g:
                    raise ValueError("cached graph is not canonical")
                gs.append(r[1])
            basis[p] = gs
            i += 1 + cnt
        elif ln.startswith("leaked "):
            _, p, m = ln.split()
            leaked[int(p)] = int(m)
            i += 1
        elif ln.startswith("matrix "):
            p = int(ln.split()[1])
            rows, cols, nnz = (int(x) for x in lines[i + 1].split())
            chunk = "\n".join(lines[i + 1:i + 2 + nnz])
            diffs[p] = SparseMatrix.loads(chunk)
            i += 2 + nnz
        elif ln == "end":
            return basis, diffs, leaked
        elif not ln:
            i += 1
        else:
            raise ValueError(f"unexpected line {ln!r}")
    raise ValueError("truncated entry")


def _remove(p):
    try:
        os.remove(p)
    except FileNotFoundError:
        pass


def cache_gc(root):
    """Verify every entry, evict corrupt ones and stale temporaries.

    Returns {"entries", "valid", "evicted"} with evicted paths relative to
    root, sorted.  Running it again on the result changes nothing.
    """
    if not os.path.isdir(root):
        raise IoError(f"no such cache directory: {root}")
    entries, valid, evicted = 0, 0, []
    for dirpath, _, files in sorted(os.walk(root)):
        for name in sorted(files):
            p = os.path.join(dirpath, name)
            rel = os.path.relpath(p, root)
            if name.startswith(".tmp-"):
                _remove(p)
                evicted.append(rel)
                continue
            if not name.endswith(SUFFIX):
                continue
            entries += 1
            try:
                with open(p, encoding="utf-8") as fh:
                    text = fh.read()
            except (OSError, UnicodeDecodeError):
                text = ""
            body = _verified_body(text)
            ok = body is not None
            if ok:
                key = text.split("\n", 2)[1][4:]
                ok = _digest(key) + SUFFIX == name and os.path.basename(dirpath) == name[:2]
            if ok:
                valid += 1
            else:
                _remove(p)
                evicted.append(rel)
    return {"entries": entries, "valid": valid, "evicted": sorted(evicted)}
