import json

import numpy as np
import pytest

from newsgrid.labels import (
    InformativeLabel,
    InvalidLabelCode,
    LabelImage,
    MalformedHeader,
    N_RAW_LABELS,
    RawLabel,
    TruncatedData,
    canonical_code_table,
    load_indexed_png,
    load_label_image,
    load_pgm,
    save_indexed_png,
    save_pgm,
    to_informative,
)


def test_exactly_ten_raw_and_six_informative_codes():
    assert len(RawLabel) == 10
    assert len(InformativeLabel) == 6
    assert sorted(int(r) for r in RawLabel) == list(range(10))


def test_grouping_partition_sizes():
    # Enumerate all ten codes and check the class sizes of the grouping.
    sizes = {}
    for raw in RawLabel:
        info = to_informative(raw)
        sizes[info] = sizes.get(info, 0) + 1
    assert sizes == {
        InformativeLabel.TITLE: 3,
        InformativeLabel.TEXT_LINE: 3,
        InformativeLabel.VERTICAL_SEPARATOR: 1,
        InformativeLabel.HORIZONTAL_SEPARATOR: 1,
        InformativeLabel.NOISE: 1,
        InformativeLabel.BACKGROUND: 1,
    }


def test_grouping_is_total_and_surjective():
    images = {to_informative(raw) for raw in RawLabel}
    assert images == set(InformativeLabel)


@pytest.mark.parametrize(
    "raw,expected",
    [
        (RawLabel.TITLE_INTER_WORD, InformativeLabel.TITLE),
        (RawLabel.BACKGROUND, InformativeLabel.BACKGROUND),
        (RawLabel.CHARACTER, InformativeLabel.TEXT_LINE),
        (RawLabel.VERTICAL_SEPARATOR, InformativeLabel.VERTICAL_SEPARATOR),
    ],
)
def test_grouping_examples(raw, expected):
    assert to_informative(raw) == expected


def test_to_informative_rejects_out_of_range():
    with pytest.raises(ValueError):
        to_informative(10)


def test_canonical_table_matches_enum():
    table = canonical_code_table()
    assert table["version"] == 1
    assert table["raw_codes"]["7"] == "vertical separator"
    for raw, info in table["raw_to_informative"].items():
        assert to_informative(int(raw)) == InformativeLabel(info)


def test_pgm_uniform_background_identity():
    img = LabelImage(np.zeros((4, 6), dtype=np.uint8))
    loaded = load_pgm(save_pgm(img))
    assert loaded.width == 6 and loaded.height == 4
    assert np.array_equal(loaded.labels, img.labels)


def test_pgm_round_trip_is_byte_identical():
    grid = np.arange(40, dtype=np.uint8).reshape(5, 8) % N_RAW_LABELS
    data = save_pgm(LabelImage(grid))
    assert save_pgm(load_pgm(data)) == data


def test_pgm_header_comments_are_skipped():
    img = load_pgm(b"P5\n# a comment\n3 2\n255\n" + bytes(6))
    assert (img.width, img.height) == (3, 2)


def test_pgm_rejects_out_of_range_code():
    grid = np.zeros((2, 3), dtype=np.uint8)
    data = save_pgm(LabelImage(grid))
    bad = data[:-6] + bytes([0, 14, 0, 0, 0, 0])
    with pytest.raises(InvalidLabelCode) as exc:
        load_pgm(bad)
    assert exc.value.value == 14
    assert exc.value.position == (1, 0)


def test_pgm_rejects_bad_maxval_and_magic():
    with pytest.raises(MalformedHeader):
        load_pgm(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(MalformedHeader):
        load_pgm(b"P2\n2 2\n255\n0 0 0 0")


def test_pgm_truncated_raster():
    with pytest.raises(TruncatedData):
        load_pgm(b"P5\n4 4\n255\n" + bytes(7))


def test_indexed_png_round_trip():
    grid = (np.arange(63, dtype=np.uint8).reshape(7, 9)) % N_RAW_LABELS
    png, palette = save_indexed_png(LabelImage(grid))
    loaded = load_indexed_png(png, palette)
    assert np.array_equal(loaded.labels, grid)
    # Fixed point: saving the loaded image reproduces both byte streams.
    png2, palette2 = save_indexed_png(loaded)
    assert png2 == png and palette2 == palette


def test_indexed_png_rejects_unmapped_index():
    grid = np.zeros((2, 2), dtype=np.uint8)
    png, _palette = save_indexed_png(LabelImage(grid))
    with pytest.raises(InvalidLabelCode):
        load_indexed_png(png, json.dumps({"1": 1}).encode())


def test_indexed_png_rejects_bad_palette():
    grid = np.zeros((2, 2), dtype=np.uint8)
    png, _ = save_indexed_png(LabelImage(grid))
    with pytest.raises(MalformedHeader):
        load_indexed_png(png, b"not json")
    with pytest.raises(MalformedHeader):
        load_indexed_png(png, json.dumps({"0": 99}).encode())


def test_load_label_image_dispatch():
    grid = np.ones((3, 3), dtype=np.uint8)
    img = load_label_image(save_pgm(LabelImage(grid)), "pgm")
    assert np.array_equal(img.labels, grid)
    with pytest.raises(ValueError):
        load_label_image(b"", "tiff")


def test_indexed_png_with_non_identity_palette():
    from io import BytesIO

    from PIL import Image

    # Palette slot 3 carries background, slot 17 carries vertical separator.
    indices = np.full((4, 5), 3, dtype=np.uint8)
    indices[1, 2] = 17
    pil = Image.fromarray(indices, mode="P")
    pil.putpalette([0] * 768)
    buf = BytesIO()
    pil.save(buf, format="PNG")
    table = json.dumps({"3": 0, "17": 7}).encode()
    img = load_indexed_png(buf.getvalue(), table)
    assert img.labels[1, 2] == 7
    assert img.labels[0, 0] == 0
