"""Key-value model files.

    [model]
    N = 3
    seed = 7

    [bond *]            ; defaults for bonds without their own section
    kind = bernoulli
    J = 1.0
    p = 0.5

    [bond 2]
    kind = shifted_symmetric
    mu = 1.0
    J = 2.0
"""

from __future__ import annotations

import configparser
import io

from glasschain.disorder import DisorderModel, law_from_config

MODEL_KEYS = {"N", "seed"}


class ModelFileError(ValueError):
    pass


def parse_model(text: str) -> tuple[DisorderModel, int | None]:
    """Model and optional seed from model-file text."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ModelFileError(f"malformed model file: {exc}") from exc
    if "model" not in cp:
        raise ModelFileError("[model]: section missing")
    head = dict(cp["model"])
    for key in head:
        if key not in MODEL_KEYS:
            raise ModelFileError(f"model.{key}: unknown key")
    if "N" not in head:
        raise ModelFileError("model.N: required")
    try:
        n = int(head["N"])
        seed = int(head["seed"]) if "seed" in head else None
    except ValueError as exc:
        raise ModelFileError(f"model: {exc}") from exc
    if n < 2:
        raise ModelFileError(f"model.N: must be >= 2, got {n}")
    sections = {}
    default = None
    for name in cp.sections():
        if name == "model":
            continue
        parts = name.split()
        if len(parts) != 2 or parts[0] != "bond":
            raise ModelFileError(f"[{name}]: unknown section")
        if parts[1] == "*":
            default = dict(cp[name])
            continue
        try:
            b = int(parts[1])
        except ValueError:
            raise ModelFileError(f"[{name}]: bond index must be an integer") from None
        if not 1 <= b <= n:
            raise ModelFileError(f"[{name}]: bond index outside 1..{n}")
        sections[b] = dict(cp[name])
    laws = []
    for b in range(1, n + 1):
        cfg = sections.get(b, default)
        if cfg is None:
            raise ModelFileError(f"bond {b}: no [bond {b}] section and no [bond *] default")
        try:
            laws.append(law_from_config(cfg))
        except KeyError as exc:
            raise ModelFileError(f"bond {b}.{exc.args[0]}") from None
        except ValueError as exc:
            raise ModelFileError(f"bond {b}: {exc}") from None
    return DisorderModel(tuple(laws)), seed


def read_model(path) -> tuple[DisorderModel, int | None]:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def dump_model(model: DisorderModel, seed: int | None = None) -> str:
    """Canonical text; floats use repr so parse_model(dump_model(m)) == m."""
    out = io.StringIO()
    out.write("[model]\n")
    out.write(f"N = {model.n}\n")
    if seed is not None:
        out.write(f"seed = {seed}\n")
    for b, law in enumerate(model.laws, start=1):
        out.write(f"\n[bond {b}]\n")
        for key, value in law.config().items():
            out.write(f"{key} = {value!r}\n" if isinstance(value, float) else f"{key} = {value}\n")
    return out.getvalue()
