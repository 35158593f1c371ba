"""File formats and offline evaluation.

Results are exchanged as plain text: one object per line, masks
run-length encoded. A prediction file and a ground-truth file are all
the evaluator needs, which is also exactly what the command line's
`eval` subcommand consumes.
"""

import tempfile

from motskit.io_formats import read_mots, write_mots_objects
from motskit.masks import BBox, rect_mask, rle_encode
from motskit.metrics import EvalInput, SeqObject, evaluate

H, W = 32, 32


def obj(frame, tid, cls, box):
    return SeqObject(frame=frame, track_id=tid, class_id=cls,
                     mask=rle_encode(rect_mask(box, H, W)))


gt = [obj(f, 1, 1, BBox(2 + f, 4, 14 + f, 12)) for f in range(6)]
# the prediction drifts by one pixel and switches identity halfway through
pred = [obj(f, 1 if f < 3 else 2, 1, BBox(3 + f, 4, 15 + f, 12)) for f in range(6)]

gt_text = write_mots_objects(gt)
pred_text = write_mots_objects(pred)
print("ground truth file:")
print(gt_text)

with tempfile.NamedTemporaryFile("w", suffix=".txt", delete=False) as fh:
    fh.write(pred_text)
    pred_path = fh.name

reread = read_mots(pred_path)
print(f"reader inverts writer: {write_mots_objects(reread) == pred_text}")
print()

report = evaluate(EvalInput.build(gt, pred, "mask"))
print(report.format_table())
print()
car = report.classes[1]
print(f"the identity switch shows up in AssA ({car.ass_a:.4f}) "
      f"and IDs ({car.id_switches}), not in DetA ({car.det_a:.4f})")
