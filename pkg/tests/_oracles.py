"""Independent reference implementations used to cross-check the library.

Everything in here is deliberately written the slow and obvious way:
per-pixel loops, exhaustive permutation search, literal state machines.
Nothing imports from motskit, so a bug in the library cannot leak into
the oracle that is supposed to catch it.
"""

from itertools import permutations


# ---------------------------------------------------------------------------
# run-length encoding
# ---------------------------------------------------------------------------

def rle_counts_scan(pixels):
    """Run lengths of a column-major pixel list, first run counting zeros.

    `pixels` is a flat list of 0/1 values already in column-major order.
    """
    counts = []
    current = 0
    run = 0
    for p in pixels:
        if int(bool(p)) == current:
            run += 1
        else:
            counts.append(run)
            current = 1 - current
            run = 1
    counts.append(run)
    return counts


def rle_chunks_encode(counts):
    """Compressed character string for a counts list.

    Mirrors the de-facto COCO convention: counts at index 3 and later are
    stored as deltas against the count two positions back, each value is
    emitted as little-endian 5-bit chunks, bit 0x20 marks continuation,
    negatives are sign-extended, and every chunk maps to chr(chunk + 48).
    """
    out = []
    for i, c in enumerate(counts):
        x = int(c)
        if i > 2:
            x -= int(counts[i - 2])
        more = True
        while more:
            chunk = x & 0x1F
            x >>= 5
            if chunk & 0x10:
                more = x != -1
            else:
                more = x != 0
            if more:
                chunk |= 0x20
            out.append(chr(chunk + 48))
    return "".join(out)


def rle_chunks_decode(text):
    """Inverse of rle_chunks_encode, returning the counts list."""
    counts = []
    pos = 0
    while pos < len(text):
        x = 0
        k = 0
        more = True
        while more:
            c = ord(text[pos]) - 48
            x |= (c & 0x1F) << (5 * k)
            more = bool(c & 0x20)
            pos += 1
            k += 1
            if not more and (c & 0x10):
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[-2]
        counts.append(x)
    return counts


def mask_to_column_major(mask):
    """Flatten a 2D 0/1 grid (list of rows) into column-major pixel order."""
    height = len(mask)
    width = len(mask[0]) if height else 0
    return [mask[r][c] for c in range(width) for r in range(height)]


# ---------------------------------------------------------------------------
# pixel-set operations
# ---------------------------------------------------------------------------

def pixel_union(a, b):
    return [[1 if (a[r][c] or b[r][c]) else 0 for c in range(len(a[0]))]
            for r in range(len(a))]


def pixel_popcount(mask):
    return sum(1 for row in mask for v in row if v)


def pixel_iou(a, b):
    inter = 0
    union = 0
    for r in range(len(a)):
        for c in range(len(a[0])):
            if a[r][c] and b[r][c]:
                inter += 1
            if a[r][c] or b[r][c]:
                union += 1
    return inter / union if union else 0.0


def pixel_box_mask_iou(x1, y1, x2, y2, mask):
    """IoU between a half-open integer pixel rectangle and a mask."""
    inter = 0
    union = 0
    for r in range(len(mask)):
        for c in range(len(mask[0])):
            in_box = x1 <= c < x2 and y1 <= r < y2
            if in_box and mask[r][c]:
                inter += 1
            if in_box or mask[r][c]:
                union += 1
    return inter / union if union else 0.0


def pixel_bbox(mask):
    rows = [r for r in range(len(mask)) for c in range(len(mask[0])) if mask[r][c]]
    cols = [c for r in range(len(mask)) for c in range(len(mask[0])) if mask[r][c]]
    if not rows:
        return None
    return (min(cols), min(rows), max(cols) + 1, max(rows) + 1)


def pixel_centroid(mask):
    xs = []
    ys = []
    for r in range(len(mask)):
        for c in range(len(mask[0])):
            if mask[r][c]:
                xs.append(c + 0.5)
                ys.append(r + 0.5)
    if not xs:
        return None
    return (sum(xs) / len(xs), sum(ys) / len(ys))


# ---------------------------------------------------------------------------
# assignment
# ---------------------------------------------------------------------------

def brute_force_assignment(cost):
    """Minimum-cost one-to-one assignment by exhaustive permutation search.

    `cost` is a list of rows. Returns (best_cost, pairs) where pairs cover
    min(rows, cols) entries; entries equal to float('inf') are allowed only
    if unavoidable and are excluded from the returned pairs and cost.
    """
    n_rows = len(cost)
    n_cols = len(cost[0]) if n_rows else 0
    if n_rows == 0 or n_cols == 0:
        return 0.0, []
    transposed = n_rows > n_cols
    if transposed:
        cost = [[cost[r][c] for r in range(n_rows)] for c in range(n_cols)]
        n_rows, n_cols = n_cols, n_rows
    best = None
    for perm in permutations(range(n_cols), n_rows):
        finite = [(r, c) for r, c in enumerate(perm) if cost[r][c] != float("inf")]
        total = sum(cost[r][c] for r, c in finite)
        key = (-len(finite), total)
        if best is None or key < best[0]:
            best = (key, finite)
    pairs = best[1]
    total = sum(cost[r][c] for r, c in pairs)
    if transposed:
        pairs = [(c, r) for r, c in pairs]
    return total, sorted(pairs)


# ---------------------------------------------------------------------------
# track quality state machine
# ---------------------------------------------------------------------------

def classify_oracle(score, tau_h, tau_l):
    if score > tau_h:
        return "high"
    if score > tau_l:
        return "uncertain"
    return "low"


def run_state_machine(scores, tau_h, tau_l, n_tries):
    """Replay a score sequence through the literal lifecycle rules.

    Returns (states, removed_at) where removed_at is the 0-based index of
    the observation that triggered removal, or None.
    """
    low_streak = 0
    states = []
    for i, s in enumerate(scores):
        state = classify_oracle(s, tau_h, tau_l)
        states.append(state)
        if state == "low":
            low_streak += 1
            if low_streak >= n_tries:
                return states, i
        else:
            low_streak = 0
    return states, None


# ---------------------------------------------------------------------------
# HOTA / CLEAR reference
# ---------------------------------------------------------------------------

def enumerate_matchings(n_rows, n_cols):
    """All injective partial matchings between row and column indices."""
    results = [[]]
    def extend(row, used_cols, current):
        if row == n_rows:
            results.append(list(current))
            return
        extend(row + 1, used_cols, current)
        for c in range(n_cols):
            if c not in used_cols:
                current.append((row, c))
                used_cols.add(c)
                extend(row + 1, used_cols, current)
                used_cols.discard(c)
                current.pop()
    if n_rows and n_cols:
        results = []
        extend(0, set(), [])
    return results


def hota_reference(gt_frames, pred_frames, similarity, alphas, tie_weight=1e-9):
    """Brute-force HOTA over small inputs.

    gt_frames / pred_frames: list per frame of id lists.
    similarity: dict frame -> matrix sim[i][j] aligned with those lists.
    Matching per frame maximizes (pair count, sum(sim) + tie_weight *
    sum(global alignment)) over all injective matchings, restricted to
    pairs with sim >= alpha. Returns dict alpha -> metrics dict.
    """
    frames = range(len(gt_frames))
    gt_count = {}
    pred_count = {}
    potential = {}
    for t in frames:
        sim = similarity[t]
        for i, g in enumerate(gt_frames[t]):
            gt_count[g] = gt_count.get(g, 0) + 1
        for j, p in enumerate(pred_frames[t]):
            pred_count[p] = pred_count.get(p, 0) + 1
        for i, g in enumerate(gt_frames[t]):
            for j, p in enumerate(pred_frames[t]):
                row_sum = sum(sim[i])
                col_sum = sum(sim[k][j] for k in range(len(gt_frames[t])))
                denom = row_sum + col_sum - sim[i][j]
                if denom > 1e-300:
                    potential[(g, p)] = potential.get((g, p), 0.0) + sim[i][j] / denom

    alignment = {}
    for (g, p), pot in potential.items():
        alignment[(g, p)] = pot / (gt_count[g] + pred_count[p] - pot)

    out = {}
    for alpha in alphas:
        tp_pairs = {}
        tp = 0
        fn = 0
        fp = 0
        loc_sum = 0.0
        for t in frames:
            sim = similarity[t]
            gl = gt_frames[t]
            pl = pred_frames[t]
            best = None
            for matching in enumerate_matchings(len(gl), len(pl)):
                eligible = [(i, j) for i, j in matching if sim[i][j] >= alpha]
                score = sum(sim[i][j] for i, j in eligible)
                tie = sum(alignment.get((gl[i], pl[j]), 0.0) for i, j in eligible)
                key = (len(eligible), score + tie_weight * tie)
                if best is None or key > best[0]:
                    best = (key, eligible)
            eligible = best[1] if best else []
            tp += len(eligible)
            fn += len(gl) - len(eligible)
            fp += len(pl) - len(eligible)
            for i, j in eligible:
                loc_sum += sim[i][j]
                key = (gl[i], pl[j])
                tp_pairs[key] = tp_pairs.get(key, 0) + 1
        det_a = tp / (tp + fn + fp) if (tp + fn + fp) else None
        if tp:
            ass_sum = 0.0
            for (g, p), tpa in tp_pairs.items():
                ass_sum += tpa * (tpa / (gt_count[g] + pred_count[p] - tpa))
            ass_a = ass_sum / tp
            loc_a = loc_sum / tp
        else:
            ass_a = 0.0
            loc_a = 0.0
        if det_a is None:
            det_a = 1.0 if not gt_count and not pred_count else 0.0
        hota = (det_a * ass_a) ** 0.5
        out[alpha] = {"DetA": det_a, "AssA": ass_a, "LocA": loc_a,
                      "HOTA": hota, "TP": tp, "FN": fn, "FP": fp}
    return out
