"""Python bindings for forge.

Arrays are numpy: images HxW or HxWxC uint8, depth and detail maps HxW
float32, masks HxW bool (any array thresholded at 0.5 is accepted). Boxes are
normalized [x1, y1, x2, y2] lists.
"""

from ._forge import (
    ForgeError,
    anchor_depth,
    augment_mask,
    bbox_mse,
    build_dataset,
    cfg_combine,
    compose,
    draw_drops,
    files_from_response,
    fuse,
    handle_api,
    hash_tree,
    hf_extract,
    iou,
    mask_ladder,
    mock_depth,
    mock_inpaint,
    mock_segment,
    published_reference,
    read_pfm,
    read_png,
    run_eval,
    stitch_collage,
    verify_manifest,
    write_coco_fixture,
    write_compose_fixture,
    write_pfm,
    write_png,
    zoom_in,
)

__all__ = [name for name in dir() if not name.startswith("_")]
