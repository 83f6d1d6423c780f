import numpy as np
import pytest

from gwct_export.architecture import LEVELS, VGG19_CONVS
from gwct_export.export import export_weights
from ckpt_synth import decoder_arrays, encoder_arrays, save_checkpoint


@pytest.fixture(scope="session")
def checkpoints(tmp_path_factory):
    """Six synthetic checkpoints plus the expected float32 tensor values."""
    root = tmp_path_factory.mktemp("ckpts")
    rng = np.random.default_rng(2024)
    expected = {}

    enc = encoder_arrays(rng)
    save_checkpoint(root / "encoder.pth", enc)
    for name, _, _, idx in VGG19_CONVS:
        expected[f"encoder/{name}.weight"] = enc[f"features.{idx}.weight"].astype(np.float32)
        expected[f"encoder/{name}.bias"] = enc[f"features.{idx}.bias"].astype(np.float32)

    decoder_paths = []
    for level in LEVELS:
        arrays = decoder_arrays(rng, level)
        path = root / f"decoder{level}.pth"
        save_checkpoint(path, arrays)
        decoder_paths.append(path)
        weight_keys = [k for k in arrays if k.endswith(".weight")]
        for i, wkey in enumerate(weight_keys):
            expected[f"decoder{level}/conv{i}.weight"] = arrays[wkey].astype(np.float32)
            expected[f"decoder{level}/conv{i}.bias"] = arrays[
                wkey[: -len(".weight")] + ".bias"
            ].astype(np.float32)

    return {
        "encoder": root / "encoder.pth",
        "decoders": decoder_paths,
        "expected": expected,
    }


@pytest.fixture(scope="session")
def exported(checkpoints, tmp_path_factory):
    out = tmp_path_factory.mktemp("exported") / "weights.gwctw"
    manifest = export_weights(checkpoints["encoder"], checkpoints["decoders"], out)
    return out, manifest


@pytest.fixture()
def announce(capsys):
    def _print(line):
        with capsys.disabled():
            print(line)

    return _print
