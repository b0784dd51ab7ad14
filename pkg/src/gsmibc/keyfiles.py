"""Plain structured-text key files written by the CLI key ceremony.

All values are hex (points in their canonical encoding, identities as raw
bytes); the curve parameters live in a separate decimal config handled by
``algebra``.  The master scalar appears only in the HLR file, which is
written owner-readable.
"""

from __future__ import annotations

import os
from pathlib import Path

from .algebra import CurveProfile
from .errors import WireFormatError
from .ibc import MasterKey
from .protocol import SimCard

SUBSCRIBERS_FILE = "subscribers.txt"
HLR_KEY_FILE = "hlr.keys"
VLR_KEY_FILE = "vlr.keys"
SIM_DIR = "sims"


def _write_kv(path: Path, mapping: dict[str, str], secret: bool = False) -> None:
    text = "".join(f"{key} = {value}\n" for key, value in mapping.items())
    path.write_text(text)
    if secret:
        os.chmod(path, 0o600)


def _read_kv(path: Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise WireFormatError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def save_hlr_keys(out_dir: Path, profile: CurveProfile, hlr_id: bytes, master: MasterKey) -> Path:
    path = out_dir / HLR_KEY_FILE
    _write_kv(
        path,
        {
            "hlr_id": hlr_id.hex(),
            "master_k": format(master.k, "x"),
            "ppub": profile.encode_point(master.p_pub).hex(),
        },
        secret=True,
    )
    return path


def load_hlr_keys(out_dir: Path, profile: CurveProfile) -> tuple[bytes, MasterKey]:
    record = _read_kv(out_dir / HLR_KEY_FILE)
    master = MasterKey(
        k=int(record["master_k"], 16),
        p_pub=profile.decode_point(bytes.fromhex(record["ppub"])),
    )
    return bytes.fromhex(record["hlr_id"]), master


def save_vlr_keys(
    out_dir: Path, profile: CurveProfile, vlr_id: bytes, hlr_id: bytes, master: MasterKey
) -> Path:
    path = out_dir / VLR_KEY_FILE
    _write_kv(
        path,
        {
            "vlr_id": vlr_id.hex(),
            "hlr_id": hlr_id.hex(),
            "ppub": profile.encode_point(master.p_pub).hex(),
        },
        secret=False,
    )
    return path


def load_vlr_id(out_dir: Path) -> bytes:
    return bytes.fromhex(_read_kv(out_dir / VLR_KEY_FILE)["vlr_id"])


def sim_filename(imsi: bytes) -> str:
    safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in imsi.decode("latin-1"))
    return f"{safe}.sim"


def save_sim(out_dir: Path, profile: CurveProfile, sim: SimCard, ki: bytes) -> Path:
    sims = out_dir / SIM_DIR
    sims.mkdir(exist_ok=True)
    path = sims / sim_filename(sim.imsi)
    _write_kv(
        path,
        {
            "imsi": sim.imsi.hex(),
            "tmsi": sim.tmsi.hex(),
            "key_point": profile.encode_point(sim.key_point).hex(),
            "ki": ki.hex(),
        },
        secret=True,
    )
    return path


def load_sim(out_dir: Path, profile: CurveProfile, imsi: bytes) -> tuple[SimCard, bytes]:
    record = _read_kv(out_dir / SIM_DIR / sim_filename(imsi))
    sim = SimCard(
        imsi=bytes.fromhex(record["imsi"]),
        tmsi=bytes.fromhex(record["tmsi"]),
        key_point=profile.decode_point(bytes.fromhex(record["key_point"])),
    )
    return sim, bytes.fromhex(record["ki"])


def append_subscriber(out_dir: Path, imsi: bytes, tmsi: bytes) -> None:
    with open(out_dir / SUBSCRIBERS_FILE, "a") as handle:
        handle.write(f"{imsi.hex()} {tmsi.hex()}\n")


def load_subscribers(out_dir: Path) -> list[tuple[bytes, bytes]]:
    path = out_dir / SUBSCRIBERS_FILE
    if not path.exists():
        return []
    out = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        imsi_hex, tmsi_hex = line.split()
        out.append((bytes.fromhex(imsi_hex), bytes.fromhex(tmsi_hex)))
    return out
