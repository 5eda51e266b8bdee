"""Text key files.

::

    prc-key v1
    kind: zero
    n: 4096
    ...                 (every PrcParams field, then kind-specific fields)
    P:
    3,17,2040           (one parity row per line)
    G:
    <hex>               (one generator column per line, packed little-endian)
    z:
    <hex>
    pads:
    <hex>               (one pad per line)
    pi:
    0,5,2,...           (forward map; constant-rate keys carry inner then outer)
    sig:
    <hex>               (verify key, then optional signing key)
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from . import attribution, f2, multi, stego, watermark, zero
from .errors import KeyFormatError

MAGIC = "prc-key v1"
KINDS = ("zero", "multi", "constrate", "deletion", "watermark", "attribution", "stego")
SECTIONS = ("P", "G", "z", "pads", "pi", "sig")
PARAM_FIELDS = ("n", "g", "t", "r", "eta", "zeta")


class _Doc:
    def __init__(self, kind: str):
        self.kind = kind
        self.header: dict[str, str] = {}
        self.sections: dict[str, list[str]] = {}

    def add_inner(self, key: zero.ZeroBitKey):
        p = key.params
        for f in PARAM_FIELDS:
            self.header[f] = repr(getattr(p, f))
        self.sections["P"] = [",".join(map(str, row)) for row in key.sk.P.idx.tolist()]
        self.sections["G"] = [f2.to_hex(col) for col in key.pk.G.T]
        self.sections["z"] = [f2.to_hex(key.sk.z)]

    def render(self) -> str:
        lines = [MAGIC, f"kind: {self.kind}"]
        lines += [f"{k}: {v}" for k, v in self.header.items()]
        for name in SECTIONS:
            if name in self.sections:
                lines.append(f"{name}:")
                lines += self.sections[name]
        return "\n".join(lines) + "\n"


def _perm_line(pi: f2.Permutation) -> str:
    return ",".join(map(str, pi.forward.tolist()))


def _add_multi(doc: _Doc, key: multi.MultiBitKey, pis: list):
    doc.add_inner(key.inner)
    doc.header["ell"] = str(key.ell)
    pis.append(_perm_line(key.pi))


def dumps(obj) -> str:
    """Serialize a key; attribution keys are ``(AttrPublicKey, AttrSecretKey | None)``."""
    pis: list[str] = []
    if isinstance(obj, zero.ZeroBitKey):
        doc = _Doc("zero")
        doc.add_inner(obj)
    elif isinstance(obj, multi.MultiBitKey):
        doc = _Doc("multi")
        _add_multi(doc, obj, pis)
    elif isinstance(obj, multi.ConstRateKey):
        doc = _Doc("constrate")
        _add_constrate(doc, obj, pis)
    elif isinstance(obj, multi.DeletionKey):
        doc = _Doc("deletion")
        _add_deletion(doc, obj, pis)
    elif isinstance(obj, watermark.WatermarkKey):
        doc = _Doc("watermark")
        if obj.deletion:
            _add_deletion(doc, obj.prc, pis)
        else:
            doc.add_inner(obj.prc)
        doc.header["Lstar"] = str(obj.Lstar)
        doc.sections["pads"] = [f2.to_hex(a) for a in obj.pads]
    elif isinstance(obj, tuple) and obj and isinstance(obj[0], attribution.AttrPublicKey):
        pk, sk = obj
        doc = _Doc("attribution")
        _add_multi(doc, pk.prc, pis)
        if not isinstance(pk.scheme, attribution.HmacTagScheme):
            raise KeyFormatError("only the keyed-hash tag scheme can be serialized")
        doc.header["scheme"] = "hmac-sha256"
        doc.header["sig_len"] = str(pk.scheme.sig_len)
        doc.header["Lstar"] = str(pk.Lstar)
        doc.sections["pads"] = [f2.to_hex(a) for a in pk.pads]
        doc.sections["sig"] = [pk.sig_vk.hex()] + ([sk.sig_sk.hex()] if sk is not None else [])
    elif isinstance(obj, stego.StegoKey):
        doc = _Doc("stego")
        doc.header["kappa"] = str(obj.kappa)
        if isinstance(obj.prc, multi.ConstRateKey):
            doc.header["prc"] = "constrate"
            _add_constrate(doc, obj.prc, pis)
        else:
            doc.header["prc"] = "multi"
            _add_multi(doc, obj.prc, pis)
    else:
        raise KeyFormatError(f"cannot serialize {type(obj).__name__}")
    if pis:
        doc.sections["pi"] = pis
    return doc.render()


def _add_constrate(doc: _Doc, key: multi.ConstRateKey, pis: list):
    if not isinstance(key.ecc, multi.RepetitionCode):
        raise KeyFormatError("only the repetition code can be serialized")
    _add_multi(doc, key.inner, pis)
    doc.header.update(k=str(key.k), lam=str(key.lam), ecc="repetition", T=str(key.ecc.T))
    pis.append(_perm_line(key.pi))


def _add_deletion(doc: _Doc, key: multi.DeletionKey, pis: list):
    if isinstance(key.inner, multi.MultiBitKey):
        _add_multi(doc, key.inner, pis)
    else:
        doc.add_inner(key.inner)
    doc.header["m"] = str(key.m)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

def _parse(text: str) -> _Doc:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise KeyFormatError(f"missing '{MAGIC}' header")
    doc: Optional[_Doc] = None
    current: Optional[str] = None
    for raw in lines[1:]:
        line = raw.strip()
        if not line:
            continue
        if line.endswith(":") and line[:-1] in SECTIONS:
            current = line[:-1]
            if doc is None:
                raise KeyFormatError("section before kind")
            doc.sections[current] = []
            continue
        if current is not None:
            doc.sections[current].append(line)
            continue
        name, sep, value = line.partition(":")
        if not sep:
            raise KeyFormatError(f"malformed header line {line!r}")
        name, value = name.strip(), value.strip()
        if name == "kind":
            if value not in KINDS:
                raise KeyFormatError(f"unknown key kind {value!r}")
            doc = _Doc(value)
        elif doc is None:
            raise KeyFormatError("kind must be the first header")
        else:
            doc.header[name] = value
    if doc is None:
        raise KeyFormatError("missing kind")
    return doc


def _need(doc: _Doc, name: str, section: bool = False):
    store = doc.sections if section else doc.header
    if name not in store:
        raise KeyFormatError(f"missing {'section' if section else 'field'} {name!r}")
    return store[name]


def _inner(doc: _Doc) -> zero.ZeroBitKey:
    try:
        params = zero.PrcParams(
            n=int(_need(doc, "n")), g=int(_need(doc, "g")), t=int(_need(doc, "t")), r=int(_need(doc, "r")),
            eta=float(_need(doc, "eta")), zeta=float(_need(doc, "zeta")),
        )
        rows = _need(doc, "P", True)
        idx = np.array([[int(i) for i in row.split(",")] for row in rows], dtype=np.int64).reshape(len(rows), params.t)
        G = np.stack([f2.from_hex(c, params.n) for c in _need(doc, "G", True)], axis=1) if params.g else None
        z = f2.from_hex(_need(doc, "z", True)[0], params.n)
    except ValueError as exc:
        raise KeyFormatError(str(exc)) from None
    if G is None or G.shape != (params.n, params.g):
        raise KeyFormatError(f"G must have {params.g} columns of length {params.n}")
    if idx.size and idx.max() >= params.n:
        raise KeyFormatError("parity index out of range")
    sk = zero.ZeroBitSecretKey(f2.SparseMatrix(params.n, idx), z, params)
    return zero.ZeroBitKey(sk, zero.ZeroBitPublicKey(G, z, params))


def _perm(line: str) -> f2.Permutation:
    fwd = np.array([int(i) for i in line.split(",")], dtype=np.int64)
    if not np.array_equal(np.sort(fwd), np.arange(fwd.size)):
        raise KeyFormatError("pi is not a permutation")
    return f2.Permutation(fwd)


def _multi(doc: _Doc, pis: list) -> multi.MultiBitKey:
    return multi.MultiBitKey(_inner(doc), int(_need(doc, "ell")), _perm(pis.pop(0)))


def _constrate(doc: _Doc, pis: list) -> multi.ConstRateKey:
    inner = _multi(doc, pis)
    if doc.header.get("ecc", "repetition") != "repetition":
        raise KeyFormatError("unknown ecc")
    ecc = multi.RepetitionCode(int(_need(doc, "k")), int(_need(doc, "T")))
    return multi.ConstRateKey(inner, ecc, _perm(pis.pop(0)), int(_need(doc, "lam")))


def _pads(doc: _Doc, width: int) -> np.ndarray:
    return np.stack([f2.from_hex(a, width) for a in _need(doc, "pads", True)])


def loads(text: str):
    doc = _parse(text)
    pis = list(doc.sections.get("pi", []))
    kind = doc.kind
    if kind == "zero":
        return _inner(doc)
    if kind == "multi":
        return _multi(doc, pis)
    if kind == "constrate":
        return _constrate(doc, pis)
    if kind == "deletion":
        inner = _multi(doc, pis) if "ell" in doc.header else _inner(doc)
        return multi.DeletionKey(inner, int(_need(doc, "m")))
    if kind == "watermark":
        inner = _inner(doc)
        prc = multi.DeletionKey(inner, int(doc.header["m"])) if "m" in doc.header else inner
        return watermark.WatermarkKey(prc, _pads(doc, inner.n), int(_need(doc, "Lstar")))
    if kind == "attribution":
        prc = _multi(doc, pis)
        if doc.header.get("scheme") != "hmac-sha256":
            raise KeyFormatError("unknown signature scheme")
        sig = _need(doc, "sig", True)
        pk = attribution.AttrPublicKey(
            prc, bytes.fromhex(sig[0]), _pads(doc, prc.n), int(_need(doc, "Lstar")),
            attribution.HmacTagScheme(int(_need(doc, "sig_len"))),
        )
        sk = attribution.AttrSecretKey(bytes.fromhex(sig[1])) if len(sig) > 1 else None
        return pk, sk
    # stego
    prc = _constrate(doc, pis) if doc.header.get("prc") == "constrate" else _multi(doc, pis)
    return stego.StegoKey(prc, int(_need(doc, "kappa")))


def save(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def load(path):
    return loads(Path(path).read_text())
