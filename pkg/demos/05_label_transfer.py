"""Carry bounding boxes from the RGB camera into event-camera coordinates.

When the two cameras watch a (roughly) planar scene, one homography maps any
annotation drawn on the RGB frames onto the event stream — so a dataset
labeled once on frames labels the events for free.
"""

import numpy as np

from evfuse import BoundingBox, clip_box, iou, transfer_boxes, warp_box

h = np.array([[0.92, 0.015, 30.0],
              [-0.01, 0.95, 8.0],
              [1e-5, 2e-6, 1.0]])

rgb_boxes = [
    BoundingBox(frame_id=0, class_name="car", x=100, y=220, w=180, h=90),
    BoundingBox(frame_id=0, class_name="sign", x=600, y=40, w=60, h=60),
    BoundingBox(frame_id=1, class_name="car", x=130, y=224, w=182, h=92),
    BoundingBox(frame_id=1, class_name="bird", x=1240, y=10, w=40, h=30),  # near the edge
]

moved = transfer_boxes(h, rgb_boxes)
print("RGB box -> event box (axis-aligned hull of the warped corners):")
for before, after in zip(rgb_boxes, moved):
    print(f"  f{before.frame_id} {before.class_name:5s} "
          f"({before.x:6.1f},{before.y:6.1f},{before.w:5.1f},{before.h:5.1f}) -> "
          f"({after.x:6.1f},{after.y:6.1f},{after.w:5.1f},{after.h:5.1f})")

print("\nclipping to the 1280x720 event canvas:")
for box in moved:
    kept = clip_box(box, 1280, 720)
    verdict = "kept" if kept else "dropped (fully outside)"
    print(f"  f{box.frame_id} {box.class_name:5s} {verdict}")

# A transfer through the identity changes nothing.
same = transfer_boxes(np.eye(3), rgb_boxes)
assert all(iou(a, b) > 0.999 for a, b in zip(rgb_boxes, same))
print("\nidentity homography keeps IoU = 1 — the transfer itself is lossless;")
print(f"warp_box on one rect: {warp_box(h, 0, 0, 100, 100)}")
