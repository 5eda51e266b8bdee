"""Command-line front end.

Bit vectors travel as ``LEN:HEX`` lines (hex of the little-endian packed bits),
one vector per line.  Stegotexts are comma-separated symbol lines.  Reports
are ``key=value`` lines on stdout.

Exit codes: 0 success, 1 negative verdict, 2 usage or input error, 3 internal error.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, attribution, channels, f2, keyfile, models, multi, stats, stego, suites, watermark, zero
from .errors import LengthMismatch, PrcError

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# I/O helpers
# --------------------------------------------------------------------------

def format_bits(v) -> str:
    v = f2.as_bits(v)
    return f"{v.size}:{f2.to_hex(v)}"


def parse_bits(line: str) -> np.ndarray:
    length, sep, hexpart = line.strip().partition(":")
    if not sep:
        raise UsageError(f"expected LEN:HEX, got {line.strip()[:40]!r}")
    try:
        return f2.from_hex(hexpart, int(length))
    except ValueError as exc:
        raise UsageError(f"bad bit line: {exc}") from None


def read_lines(path) -> list[str]:
    text = sys.stdin.read() if str(path) == "-" else Path(path).read_text()
    return [ln for ln in text.splitlines() if ln.strip()]


def read_bits(path) -> list[np.ndarray]:
    return [parse_bits(ln) for ln in read_lines(path)]


def write_lines(path, lines) -> None:
    text = "".join(f"{ln}\n" for ln in lines)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def parse_message(hexstr, nbits: int) -> np.ndarray:
    if hexstr is None:
        return np.zeros(nbits, dtype=np.uint8)
    try:
        return f2.from_hex(hexstr, nbits)
    except ValueError as exc:
        raise UsageError(f"--message: {exc}") from None


def _seed(s):
    return int(s) if s.lstrip("-").isdigit() else s


# --------------------------------------------------------------------------
# keygen / encode / decode / channel
# --------------------------------------------------------------------------

def _params(a) -> zero.PrcParams:
    if a.preset == "lpn":
        p = zero.preset_lpn(a.n, eta=a.eta if a.eta is not None else 0.05)
    elif a.preset == "xor":
        if a.epsilon is None:
            raise UsageError("--preset xor needs --epsilon")
        p = zero.preset_xor(a.n, a.epsilon, eta=a.eta if a.eta is not None else 0.05)
    else:
        missing = [f for f in ("g", "t", "r") if getattr(a, f) is None]
        if missing:
            raise UsageError(f"explicit parameters need --{', --'.join(missing)} (or use --preset)")
        p = zero.PrcParams(n=a.n, g=a.g, t=a.t, r=a.r, eta=0.05 if a.eta is None else a.eta,
                           zeta=0.1 if a.zeta is None else a.zeta)
    # explicit flags override preset fields
    over = {f: getattr(a, f) for f in ("g", "t", "r", "eta", "zeta") if getattr(a, f) is not None}
    return dataclasses.replace(p, **over)


def cmd_keygen(a) -> int:
    rng = f2.random_source(_seed(a.seed))
    p = _params(a)
    kind = a.kind
    if kind == "zero":
        key = zero.keygen(p, rng)
    elif kind == "multi":
        key = multi.multibit_keygen(a.ell, p, rng)
    elif kind == "constrate":
        key = multi.constrate_keygen(a.k, p, rng, ecc=multi.RepetitionCode(a.k, a.T), lam=a.lam)
    elif kind == "deletion":
        key = multi.DeletionKey(zero.keygen(p, rng), a.m)
    elif kind == "watermark":
        width = a.m if a.deletion else None
        block = p.n * (a.m if a.deletion else 1)
        key = watermark.wm_setup(p, a.Lstar or 3 * block, rng, majority_width=width)
    elif kind == "attribution":
        scheme = attribution.HmacTagScheme(a.sig_len)
        pk, sk = attribution.attr_setup(p, a.Lstar or 2 * p.n * (a.ell + 1), scheme, rng, ell=a.ell)
        key = (pk, sk)
    else:
        key = stego.StegoKey(multi.multibit_keygen(a.ell, p, rng), a.kappa)
    keyfile.save(a.out, key)
    print(f"kind={kind} n={p.n} g={p.g} t={p.t} r={p.r} eta={p.eta} zeta={p.zeta:.6g} threshold={p.threshold} out={a.out}")
    return EXIT_OK


def _load(path):
    try:
        return keyfile.load(path)
    except FileNotFoundError:
        raise UsageError(f"no such key file: {path}") from None


def cmd_encode(a) -> int:
    key = _load(a.key)
    rng = f2.random_source(_seed(a.seed))
    out = []
    for _ in range(a.count):
        if isinstance(key, zero.ZeroBitKey):
            x = zero.encode(key.pk, rng)
        elif isinstance(key, multi.MultiBitKey):
            x = multi.multibit_encode(key, parse_message(a.message, key.ell), rng)
        elif isinstance(key, multi.ConstRateKey):
            x = multi.constrate_encode(key, parse_message(a.message, key.k), rng)
        elif isinstance(key, multi.DeletionKey):
            msg = parse_message(a.message, key.inner.ell) if isinstance(key.inner, multi.MultiBitKey) else None
            x = multi.deletion_encode(key, msg, rng)
        else:
            raise UsageError("encode needs a zero, multi, constrate or deletion key")
        out.append(format_bits(x))
    write_lines(a.out, out)
    return EXIT_OK


def _decode_line(key, x, rng) -> tuple[bool, str]:
    if isinstance(key, zero.ZeroBitKey):
        if x.size != key.n:
            raise LengthMismatch(f"codeword has {x.size} bits, key expects {key.n}")
        o = zero.decode(key.sk, x)
        return o.detected, f"verdict={o.verdict.value} unsat_count={o.unsat_count} threshold={o.threshold}"
    if isinstance(key, multi.DeletionKey):
        o = multi.deletion_decode(key, x, rng)
        if isinstance(o, zero.DecodeOutcome):
            return o.detected, f"verdict={o.verdict.value} unsat_count={o.unsat_count} threshold={o.threshold}"
        return o is not None, "verdict=bot" if o is None else f"verdict=decoded message={f2.to_hex(o)}"
    if isinstance(key, multi.MultiBitKey):
        m = multi.multibit_decode(key, x)
    elif isinstance(key, multi.ConstRateKey):
        m = multi.constrate_decode(key, x)
    else:
        raise UsageError("decode needs a zero, multi, constrate or deletion key")
    return m is not None, "verdict=bot" if m is None else f"verdict=decoded message={f2.to_hex(m)}"


def cmd_decode(a) -> int:
    key = _load(a.key)
    rng = f2.random_source(_seed(a.seed))
    ok = True
    for x in read_bits(a.input):
        good, line = _decode_line(key, x, rng)
        ok &= good
        print(line)
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_channel(a) -> int:
    try:
        ch = channels.parse(a.spec)
    except ValueError as exc:
        raise UsageError(f"--spec: {exc}") from None
    rng = f2.random_source(_seed(a.seed))
    write_lines(a.out, [format_bits(channels.apply(ch, x, rng)) for x in read_bits(a.input)])
    return EXIT_OK


# --------------------------------------------------------------------------
# watermark / attribution
# --------------------------------------------------------------------------

def _model(spec):
    try:
        return models.parse_model(spec)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"--model: {exc}") from None


def cmd_watermark(a) -> int:
    key = _load(a.key)
    if not isinstance(key, watermark.WatermarkKey):
        raise UsageError("watermark commands need a watermark key")
    if a.action == "gen":
        rng = f2.random_source(_seed(a.seed))
        tokens, _ = watermark.wm_generate_batch(key, a.prompt, _model(a.model), rng, a.count, a.length)
        write_lines(a.out, [format_bits(t) for t in tokens])
        return EXIT_OK
    ok = True
    for t in read_bits(a.input):
        rep = watermark.wm_detect(key, t) if a.literal else watermark.wm_detect_fast(key, t)
        ok &= rep.detected
        print(rep.as_line())
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_attr(a) -> int:
    key = _load(a.key)
    if not (isinstance(key, tuple) and isinstance(key[0], attribution.AttrPublicKey)):
        raise UsageError("attr commands need an attribution key")
    pk, sk = key
    if a.action == "gen":
        if sk is None:
            raise UsageError("attr gen needs a key file that includes the signing key")
        rng = f2.random_source(_seed(a.seed))
        tokens = attribution.attr_generate_batch(pk, sk, a.prompt, _model(a.model), rng, a.count, a.length)
        write_lines(a.out, [format_bits(t) for t in tokens])
        return EXIT_OK
    ok = True
    for t in read_bits(a.input):
        if a.detect:
            rep = attribution.attr_detect(pk, t)
            ok &= rep.detected
            print(rep.as_line())
            continue
        prefix, verified, rep = attribution.attr_text(pk, t)
        ok &= verified
        print(rep.as_line() + (f" prefix={format_bits(prefix)}" if verified and a.show_prefix else ""))
    return EXIT_OK if ok else EXIT_NEGATIVE


# --------------------------------------------------------------------------
# stego
# --------------------------------------------------------------------------

def _hash(name):
    if name not in stego.HASHES:
        raise UsageError(f"--hash must be one of {', '.join(stego.HASHES)}")
    return stego.HASHES[name]


def cmd_stego(a) -> int:
    key = _load(a.key)
    if not isinstance(key, stego.StegoKey):
        raise UsageError("stego commands need a stego key")
    f = _hash(a.hash)
    if a.action == "embed":
        try:
            channel = stego.parse_channel(a.channel)
        except (ValueError, OSError) as exc:
            raise UsageError(f"--channel: {exc}") from None
        rng = f2.random_source(_seed(a.seed))
        st = stego.steg_encode(key, channel, f, parse_message(a.message, key.message_bits), rng=rng)
        write_lines(a.out, [",".join(map(str, st.documents.tolist()))])
        return EXIT_OK
    ok = True
    for line in read_lines(a.input):
        try:
            docs = np.array([int(d) for d in line.split(",")], dtype=np.int64)
        except ValueError:
            raise UsageError("stegotext lines must be comma-separated integers") from None
        m = stego.steg_decode(key, f, docs)
        ok &= m is not None
        print("verdict=bot" if m is None else f"verdict=decoded message={f2.to_hex(m)}")
    return EXIT_OK if ok else EXIT_NEGATIVE


# --------------------------------------------------------------------------
# stats
# --------------------------------------------------------------------------

def _sample_matrix(path) -> np.ndarray:
    rows = read_bits(path)
    if not rows or len({r.size for r in rows}) != 1:
        raise UsageError("samples must be non-empty and of equal length")
    return np.stack(rows)


def cmd_stats(a) -> int:
    if a.action == "battery":
        reports = stats.battery(_sample_matrix(a.input), a.significance)
        for r in reports:
            print(r.as_line())
        return EXIT_OK if stats.battery_passed(reports) else EXIT_NEGATIVE
    if a.action == "attack":
        res = stats.sparse_parity_attack(_sample_matrix(a.input), a.t_max, budget=a.budget)
        print(f"samples={res.samples} candidates={res.candidates} threshold={res.threshold:.6g} found={len(res.found)}")
        for s, p0 in res.found:
            print(f"support={','.join(map(str, s))} pr_zero={p0:.6g}")
        return EXIT_NEGATIVE if res.found else EXIT_OK
    return run_suite(a.name, a.skip_determinism)


def run_suite(name: str, skip_determinism: bool = False) -> int:
    if name == "acceptance":
        numbers = list(suites.CRITERIA)
    else:
        try:
            numbers = [int(name.lstrip("c"))]
        except ValueError:
            raise UsageError("suite name must be 'acceptance' or c1..c15") from None
        if numbers[0] not in suites.CRITERIA and numbers[0] != 15:
            raise UsageError("suite name must be 'acceptance' or c1..c15")

    def show(res):
        print(res.summary(), f"seconds={res.seconds:.1f}", flush=True)

    want_det = 15 in numbers or (name == "acceptance" and not skip_determinism)
    body = [k for k in numbers if k != 15] or list(suites.CRITERIA)
    results = suites.run_all(body, on_result=show if numbers != [15] else None)
    if want_det:
        det = suites.c15_determinism(results, suites.run_all(body))
        show(det)
        results = results + [det] if numbers != [15] else [det]
    return EXIT_OK if all(r.passed for r in results) else EXIT_NEGATIVE


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="prckit", description="Pseudorandom error-correcting codes toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("keygen", help="sample a key and write a key file")
    k.add_argument("--kind", choices=keyfile.KINDS, default="zero")
    k.add_argument("--preset", choices=("lpn", "xor"))
    k.add_argument("--epsilon", type=float, help="exponent for the xor preset")
    k.add_argument("--n", type=int, required=True)
    for f in ("g", "t", "r"):
        k.add_argument(f"--{f}", type=int)
    k.add_argument("--eta", type=float)
    k.add_argument("--zeta", type=float)
    k.add_argument("--ell", type=int, default=16, help="message bits (multi, attribution, stego)")
    k.add_argument("--k", type=int, default=128, help="message bits (constrate)")
    k.add_argument("--T", type=int, default=15, help="repetition factor (constrate)")
    k.add_argument("--lam", type=int, default=128, help="seed bits (constrate)")
    k.add_argument("--m", type=int, default=1025, help="majority width (deletion)")
    k.add_argument("--deletion", action="store_true", help="watermark through the majority code")
    k.add_argument("--Lstar", type=int, help="maximum response length (watermark, attribution)")
    k.add_argument("--kappa", type=int, default=128, help="rejection-sampling budget (stego)")
    k.add_argument("--sig-len", type=int, default=64)
    k.add_argument("--seed", default="0")
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_keygen)

    e = sub.add_parser("encode", help="write codewords as LEN:HEX lines")
    e.add_argument("--key", required=True)
    e.add_argument("--message", help="hex message (omit for zero-bit keys)")
    e.add_argument("--count", type=int, default=1)
    e.add_argument("--seed", default="0")
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="decode LEN:HEX lines")
    d.add_argument("--key", required=True)
    d.add_argument("--in", dest="input", default="-")
    d.add_argument("--seed", default="0", help="tie-break randomness for majority decoding")
    d.set_defaults(func=cmd_decode)

    c = sub.add_parser("channel", help="corrupt LEN:HEX lines")
    c.add_argument("--spec", required=True, help="e.g. 'bsc:0.1|bdc:0.3' (rightmost applied first)")
    c.add_argument("--seed", default="0")
    c.add_argument("--in", dest="input", default="-")
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_channel)

    w = sub.add_parser("watermark", help="generate or detect watermarked responses")
    w.add_argument("action", choices=("gen", "detect"))
    w.add_argument("--key", required=True)
    w.add_argument("--model", default="hash:0.3:0.7")
    w.add_argument("--prompt", default="")
    w.add_argument("--count", type=int, default=1)
    w.add_argument("--length", type=int)
    w.add_argument("--literal", action="store_true", help="detect with the literal window scan")
    w.add_argument("--seed", default="0")
    w.add_argument("--in", dest="input", default="-")
    w.add_argument("--out", default="-")
    w.set_defaults(func=cmd_watermark)

    t = sub.add_parser("attr", help="generate or check attributed responses")
    t.add_argument("action", choices=("gen", "check"))
    t.add_argument("--key", required=True)
    t.add_argument("--model", default="hash:0.3:0.7")
    t.add_argument("--prompt", default="")
    t.add_argument("--count", type=int, default=1)
    t.add_argument("--length", type=int)
    t.add_argument("--detect", action="store_true", help="watermark detection only")
    t.add_argument("--show-prefix", action="store_true")
    t.add_argument("--seed", default="0")
    t.add_argument("--in", dest="input", default="-")
    t.add_argument("--out", default="-")
    t.set_defaults(func=cmd_attr)

    s = sub.add_parser("stego", help="hide or recover a message in covertext documents")
    s.add_argument("action", choices=("embed", "extract"))
    s.add_argument("--key", required=True)
    s.add_argument("--channel", default="uniform:4")
    s.add_argument("--hash", default="parity")
    s.add_argument("--message")
    s.add_argument("--seed", default="0")
    s.add_argument("--in", dest="input", default="-")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_stego)

    st = sub.add_parser("stats", help="randomness battery, sparse attack, acceptance suites")
    st.add_argument("action", choices=("battery", "attack", "suite"))
    st.add_argument("name", nargs="?", default="acceptance")
    st.add_argument("--in", dest="input", default="-")
    st.add_argument("--significance", type=float, default=stats.SIGNIFICANCE)
    st.add_argument("--t-max", type=int, default=2)
    st.add_argument("--budget", type=int, default=stats.DEFAULT_BUDGET)
    st.add_argument("--skip-determinism", action="store_true", help="do not re-run the suite to compare outputs")
    st.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream closed early (e.g. `| head`); silence the flush at exit
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except (UsageError, PrcError, OSError) as exc:
        print(f"prckit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"prckit: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
