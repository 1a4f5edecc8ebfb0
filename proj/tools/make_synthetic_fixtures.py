#!/usr/bin/env python3
"""Regenerates data/synthetic/: three small topics with drawn fixture images.

Each topic gets ten valid images (PNG, JPEG and WebP, at least 256x256) and a
few listing entries the ingester must skip: an undersized image, a GIF, a text
file and a file that does not exist. Listing sizes differ per topic.
"""
import json
import random
import sys
from pathlib import Path

from PIL import Image, ImageDraw

TOPICS = [
    {
        "topic_id": "gujia",
        "wiki_url": "https://en.wikipedia.org/wiki/Gujia",
        "summary_sentence": "Gujhia (also known as gujiya, gujia, gughara, pedakiya, purukiya, karanji, "
        "kajjikayalu, somas, or karjikayi), a sweet deep-fried pastry popular in the Indian subcontinent.",
        "category": "FoodAndDrink",
        "monthly_views": 4200,
        "distractor_ids": ["chandrakala"],
        "palette": [(214, 170, 92), (180, 40, 40), (240, 220, 180)],
        "extra_invalid": 0,
    },
    {
        "topic_id": "chandrakala",
        "wiki_url": "https://en.wikipedia.org/wiki/Chandrakala_(sweet)",
        "summary_sentence": "Chandrakala is a sweet from the Indian subcontinent, a round pastry filled with "
        "khoa and dried fruit and soaked in sugar syrup.",
        "category": "FoodAndDrink",
        "monthly_views": 1800,
        "distractor_ids": ["gujia"],
        "palette": [(230, 190, 90), (120, 70, 30), (250, 240, 210)],
        "extra_invalid": -1,
    },
    {
        "topic_id": "stepwell",
        "wiki_url": "https://en.wikipedia.org/wiki/Stepwell",
        "summary_sentence": "A stepwell is a well or pond in which the water is reached by descending a set of steps.",
        "category": "Architecture",
        "monthly_views": 5600,
        "distractor_ids": [],
        "palette": [(190, 160, 120), (60, 90, 110), (220, 200, 170)],
        "extra_invalid": 1,
    },
]

FORMATS = [("png", "PNG"), ("jpg", "JPEG"), ("webp", "WEBP")]


def draw_image(rng, palette, size):
    img = Image.new("RGB", size, palette[2])
    d = ImageDraw.Draw(img)
    for _ in range(rng.randint(3, 7)):
        x0, y0 = rng.randint(0, size[0] - 40), rng.randint(0, size[1] - 40)
        x1, y1 = x0 + rng.randint(30, size[0] // 2), y0 + rng.randint(30, size[1] // 2)
        color = tuple(max(0, min(255, c + rng.randint(-30, 30))) for c in rng.choice(palette[:2]))
        (d.ellipse if rng.random() < 0.5 else d.rectangle)([x0, y0, x1, y1], fill=color)
    return img


def main(root: Path):
    root.mkdir(parents=True, exist_ok=True)
    registry = []
    for t in TOPICS:
        rng = random.Random(t["topic_id"])
        folder = root / "source" / t["topic_id"]
        folder.mkdir(parents=True, exist_ok=True)
        files = []
        for i in range(10):
            ext, fmt = FORMATS[i % 3]
            name = f"{t['topic_id']}_{i:02d}.{ext}"
            size = (rng.choice([256, 320, 384]), rng.choice([256, 288, 320]))
            img = draw_image(rng, t["palette"], size)
            kwargs = {"quality": 85} if fmt in ("JPEG", "WEBP") else {}
            img.save(folder / name, fmt, **kwargs)
            files.append({"file": name, "description": f"{t['topic_id'].capitalize()} photograph {i + 1}"})
        draw_image(rng, t["palette"], (128, 128)).save(folder / "thumbnail.png", "PNG")
        files.insert(3, {"file": "thumbnail.png", "description": "Small thumbnail"})
        draw_image(rng, t["palette"], (256, 256)).save(folder / "animation.gif", "GIF")
        files.insert(6, {"file": "animation.gif", "description": "Animated image"})
        (folder / "notes.txt").write_text("not an image\n")
        files.append({"file": "notes.txt", "description": "Text file"})
        if t["extra_invalid"] >= 0:
            files.append({"file": "missing.png", "description": "Deleted upload"})
        if t["extra_invalid"] >= 1:
            draw_image(rng, t["palette"], (200, 300)).save(folder / "narrow.png", "PNG")
            files.append({"file": "narrow.png", "description": "Too narrow"})
        (folder / "listing.json").write_text(json.dumps({"files": files}, indent=2) + "\n")
        registry.append({k: t[k] for k in ("topic_id", "wiki_url", "summary_sentence", "category",
                                           "monthly_views", "distractor_ids")})
    registry.sort(key=lambda t: t["topic_id"])
    (root / "registry.json").write_text(json.dumps({"topics": registry}, indent=2) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "synthetic")
