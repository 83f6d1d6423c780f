"""Layer tables for the VGG-19 encoder prefix and its mirrored decoders.

Declared here independently of any consumer so an exported weight file can
be audited against this module alone.
"""

# (tap name, in channels, out channels, torchvision Sequential index)
VGG19_CONVS = (
    ("conv1_1", 3, 64, 0),
    ("conv1_2", 64, 64, 2),
    ("conv2_1", 64, 128, 5),
    ("conv2_2", 128, 128, 7),
    ("conv3_1", 128, 256, 10),
    ("conv3_2", 256, 256, 12),
    ("conv3_3", 256, 256, 14),
    ("conv3_4", 256, 256, 16),
    ("conv4_1", 256, 512, 19),
    ("conv4_2", 512, 512, 21),
    ("conv4_3", 512, 512, 23),
    ("conv4_4", 512, 512, 25),
    ("conv5_1", 512, 512, 28),
)

LEVELS = (1, 2, 3, 4, 5)

# Number of encoder convs feeding each level's feature tap (conv{k}_1).
PREFIX_LEN = {1: 1, 2: 3, 3: 5, 4: 9, 5: 13}

LEVEL_CHANNELS = (64, 128, 256, 512, 512)


def decoder_convs(level):
    """(in, out) channel pairs of the level's decoder convs, forward order.

    Each decoder runs the level's encoder prefix backwards, so conv i
    inverts encoder conv (prefix_len - 1 - i); the final conv lands back
    on 3 RGB channels.
    """
    prefix = VGG19_CONVS[: PREFIX_LEN[level]]
    return tuple((out_ch, in_ch) for _, in_ch, out_ch, _ in reversed(prefix))


def required_tensors():
    """Every tensor a complete weight file must carry, with its shape."""
    req = {}
    for name, in_ch, out_ch, _ in VGG19_CONVS:
        req[f"encoder/{name}.weight"] = (out_ch, in_ch, 3, 3)
        req[f"encoder/{name}.bias"] = (out_ch,)
    for level in LEVELS:
        for i, (in_ch, out_ch) in enumerate(decoder_convs(level)):
            req[f"decoder{level}/conv{i}.weight"] = (out_ch, in_ch, 3, 3)
            req[f"decoder{level}/conv{i}.bias"] = (out_ch,)
    return req
