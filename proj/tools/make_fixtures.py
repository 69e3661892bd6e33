"""Regenerates the bundled test fixtures under tests/data.

The output is deterministic; rerun after changing the recipe and commit the
result.
"""

import json
import random
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def coco_sample():
    rng = random.Random(20240611)
    categories = [
        {"id": 1, "name": "person"},
        {"id": 3, "name": "car"},
        {"id": 18, "name": "dog"},
    ]
    sizes = [(640, 480), (640, 427), (500, 375), (427, 640), (612, 612)]
    images, annotations = [], []
    ann_id = 1

    def add(image_id, bbox, cat, crowd=0):
        nonlocal ann_id
        annotations.append({
            "id": ann_id,
            "image_id": image_id,
            "category_id": cat,
            "bbox": [round(v, 2) for v in bbox],
            "area": round(bbox[2] * bbox[3], 2),
            "iscrowd": crowd,
        })
        ann_id += 1

    for i in range(40):
        image_id = 1000 + 7 * i
        w, h = sizes[i % len(sizes)]
        images.append({"id": image_id, "file_name": f"{image_id:012d}.jpg",
                       "width": w, "height": h})
        for _ in range(rng.randint(0, 6)):
            bw = rng.choice([rng.uniform(4, 32), rng.uniform(32, 96), rng.uniform(96, 400)])
            bh = bw * rng.uniform(0.4, 2.2)
            bw, bh = min(bw, w - 2), min(bh, h - 2)
            x = rng.uniform(0, w - bw)
            y = rng.uniform(0, h - bh)
            add(image_id, [x, y, bw, bh], rng.choice(categories)["id"])

    # Edge cases, all in the first image (640 x 480).
    first = images[0]["id"]
    add(first, [100, 100, 0, 30], 1)            # zero width
    add(first, [200, 120, 25, -4], 3)           # negative height
    add(first, [50, 60, 80, 90], 1, crowd=1)    # crowd region
    add(first, [620, 200, 40, 40], 3)           # center x = 640 (on the border)
    add(first, [-60, 300, 40, 30], 18)          # center left of the image
    # Overlapping pair whose centers share a cell at every stride.
    add(first, [330, 330, 60, 40], 1)           # center (360, 350)
    add(first, [331, 330, 60, 40], 3)           # center (361, 350)
    return {"info": {"description": "objectbox test sample"},
            "images": images, "annotations": annotations, "categories": categories}


def detection_lines(boxes):
    return "".join(json.dumps(b, separators=(",", ":")) + "\n" for b in boxes)


def duplicate_boxes():
    box = {"x1": 40.0, "y1": 30.0, "x2": 120.0, "y2": 90.0, "class": 0, "scale": 1}
    return [dict(box, score=0.9), dict(box, score=0.8)]


def random_boxes():
    rng = random.Random(77)
    out = []
    for _ in range(20):
        x1, y1 = rng.uniform(0, 200), rng.uniform(0, 200)
        out.append({
            "x1": round(x1, 3), "y1": round(y1, 3),
            "x2": round(x1 + rng.uniform(20, 80), 3), "y2": round(y1 + rng.uniform(20, 80), 3),
            "score": round(rng.uniform(0.0005, 1.0), 4),
            "class": rng.randint(0, 1), "scale": rng.randint(0, 2),
        })
    return out


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "coco_sample.json").write_text(json.dumps(coco_sample(), indent=1) + "\n")
    (DATA / "dets_duplicate.jsonl").write_text(detection_lines(duplicate_boxes()))
    (DATA / "dets_random20.jsonl").write_text(detection_lines(random_boxes()))
    scene = {"image_w": 640, "image_h": 480,
             "objects": [{"cx": 100, "cy": 60, "w": 40, "h": 20, "class": 0},
                         {"cx": 300.5, "cy": 211.25, "w": 150, "h": 90, "class": 1},
                         {"cx": 12, "cy": 12, "w": 4, "h": 4, "class": 0}]}
    (DATA / "scene_small.json").write_text(json.dumps(scene, indent=1) + "\n")


if __name__ == "__main__":
    main()
