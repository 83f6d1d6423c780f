"""One-shot conversion of VGG-19 encoder and mirrored decoder checkpoints
into the weight container consumed by the stylization codec."""

import hashlib
import json
from pathlib import Path

import numpy as np
import torch

from .architecture import LEVELS, VGG19_CONVS, decoder_convs, required_tensors
from .container import WEIGHTS_MAGIC, write_weight_file
from .errors import CheckpointFormatError, LayerShapeError, MissingLayerError

_LAYOUT_NOTE = (
    "float32, row-major; conv kernels keep the source (out, in, kh, kw) "
    "axis order, no transposition applied"
)


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _load_state_dict(path):
    try:
        obj = torch.load(path, map_location="cpu", weights_only=True)
    except OSError:
        raise
    except Exception as exc:
        raise CheckpointFormatError(f"{path}: not a loadable checkpoint ({exc})") from None
    if isinstance(obj, dict) and isinstance(obj.get("state_dict"), dict):
        obj = obj["state_dict"]
    if not isinstance(obj, dict):
        raise CheckpointFormatError(
            f"{path}: expected a state dict, got {type(obj).__name__}"
        )
    out = {}
    for key, value in obj.items():
        if hasattr(value, "detach"):
            value = value.detach().cpu().numpy()
        if isinstance(value, np.ndarray):
            out[str(key)] = value
    if not out:
        raise CheckpointFormatError(f"{path}: state dict holds no tensors")
    return out


def _index_lookup(sd):
    # Trailing '<n>.weight' / '<n>.bias' Sequential indices, any dotted
    # prefix ('features.0.weight', 'module.features.0.weight', '0.weight').
    table = {}
    for key in sd:
        parts = key.split(".")
        if len(parts) >= 2 and parts[-1] in ("weight", "bias") and parts[-2].isdigit():
            table[(int(parts[-2]), parts[-1])] = key
    return table


def map_encoder(sd):
    """Name the 13 VGG-19 conv tensors through conv5_1 for the weight file.

    Accepts torchvision-style Sequential indices or tap-named keys such as
    'conv1_1.weight'. Returns (tensors, source-to-output name mapping).
    """
    by_index = _index_lookup(sd)
    tensors, mapping = {}, {}
    for name, in_ch, out_ch, seq_idx in VGG19_CONVS:
        for kind, shape in (("weight", (out_ch, in_ch, 3, 3)), ("bias", (out_ch,))):
            key = by_index.get((seq_idx, kind))
            if key is None and f"{name}.{kind}" in sd:
                key = f"{name}.{kind}"
            if key is None:
                raise MissingLayerError(f"encoder checkpoint is missing tap {name} ({kind})")
            arr = sd[key]
            if tuple(arr.shape) != shape:
                raise LayerShapeError(
                    f"encoder/{name}.{kind}: expected shape {shape}, got {tuple(arr.shape)}"
                )
            tensors[f"encoder/{name}.{kind}"] = arr
            mapping[f"encoder:{key}"] = f"encoder/{name}.{kind}"
    return tensors, mapping


def map_decoder(sd, level):
    """Name one decoder's conv tensors, pairing each 4-d weight with its
    bias in checkpoint (forward) order."""
    convs = []
    for key, arr in sd.items():
        if key.endswith(".weight") and arr.ndim == 4:
            bias_key = key[: -len(".weight")] + ".bias"
            if bias_key not in sd:
                raise MissingLayerError(f"decoder{level} checkpoint has no bias for {key}")
            convs.append((key, bias_key, arr, sd[bias_key]))
    expected = decoder_convs(level)
    if len(convs) != len(expected):
        raise MissingLayerError(
            f"decoder{level} checkpoint has {len(convs)} conv layers, "
            f"expected {len(expected)}"
        )
    tensors, mapping = {}, {}
    for i, ((wkey, bkey, w, b), (in_ch, out_ch)) in enumerate(zip(convs, expected)):
        if tuple(w.shape) != (out_ch, in_ch, 3, 3):
            raise LayerShapeError(
                f"decoder{level}/conv{i}.weight: expected shape "
                f"{(out_ch, in_ch, 3, 3)}, got {tuple(w.shape)}"
            )
        if tuple(b.shape) != (out_ch,):
            raise LayerShapeError(
                f"decoder{level}/conv{i}.bias: expected shape {(out_ch,)}, "
                f"got {tuple(b.shape)}"
            )
        tensors[f"decoder{level}/conv{i}.weight"] = w
        tensors[f"decoder{level}/conv{i}.bias"] = b
        mapping[f"decoder{level}:{wkey}"] = f"decoder{level}/conv{i}.weight"
        mapping[f"decoder{level}:{bkey}"] = f"decoder{level}/conv{i}.bias"
    return tensors, mapping


def manifest_path_for(out_path):
    out_path = Path(out_path)
    return out_path.with_name(out_path.stem + ".manifest.json")


def export_weights(encoder_ckpt, decoder_ckpts, out_path):
    """Convert six checkpoints into one weight file; returns the manifest.

    ``decoder_ckpts`` lists the five decoder checkpoints for levels 1..5.
    The manifest (sources, hashes, name mapping, shapes, level widths) is
    also written as JSON next to ``out_path``.
    """
    decoder_ckpts = list(decoder_ckpts)
    if len(decoder_ckpts) != len(LEVELS):
        raise CheckpointFormatError(
            f"expected {len(LEVELS)} decoder checkpoints, got {len(decoder_ckpts)}"
        )
    tensors, mapping = map_encoder(_load_state_dict(encoder_ckpt))
    for level, path in zip(LEVELS, decoder_ckpts):
        level_tensors, level_mapping = map_decoder(_load_state_dict(path), level)
        tensors.update(level_tensors)
        mapping.update(level_mapping)

    required = required_tensors()
    missing = sorted(set(required) - set(mapping.values()))
    if missing:
        raise MissingLayerError("missing tensors: " + ", ".join(missing))
    if sorted(mapping.values()) != sorted(required):
        raise CheckpointFormatError("duplicate or unexpected tensor names produced")

    out_path = Path(out_path)
    write_weight_file(out_path, tensors)
    # Widths are read back from the exported taps rather than assumed.
    widths = [int(tensors[f"encoder/conv{k}_1.weight"].shape[0]) for k in LEVELS]
    manifest = {
        "format": WEIGHTS_MAGIC.decode("ascii"),
        "output": out_path.name,
        "output_sha256": _sha256(out_path),
        "level_channels": widths,
        "layout": _LAYOUT_NOTE,
        "sources": {
            "encoder": {"path": str(encoder_ckpt), "sha256": _sha256(encoder_ckpt)},
            "decoders": [
                {"level": level, "path": str(path), "sha256": _sha256(path)}
                for level, path in zip(LEVELS, decoder_ckpts)
            ],
        },
        "mapping": dict(sorted(mapping.items())),
        "shapes": {name: list(tensors[name].shape) for name in sorted(tensors)},
    }
    with open(manifest_path_for(out_path), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
