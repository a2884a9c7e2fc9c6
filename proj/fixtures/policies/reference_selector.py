def heuristic_selector(condition):
    import numpy as np

    # --- Step 1: Calculate statistics ---
    def calculate_stats(condition):
        stats = {
            "averages": {k: 0 for k in condition[0].keys()},
            "trends": {k: [] for k in condition[0].keys()},
            "accelerations": {k: [] for k in condition[0].keys()},
            "recent_changes": {k: 0 for k in condition[0].keys()},
            "recent_accelerations": {k: 0 for k in condition[0].keys()},
        }
        n = len(condition)
        for k in condition[0].keys():
            series = [group[k] for group in condition]
            stats["averages"][k] = sum(series) / n
            trend = [series[i + 1] - series[i] for i in range(n - 1)] or [0.0]
            accel = [trend[i + 1] - trend[i] for i in range(len(trend) - 1)] or [0.0]
            stats["trends"][k] = trend
            stats["accelerations"][k] = accel
            stats["recent_changes"][k] = trend[-1]
            stats["recent_accelerations"][k] = accel[-1]
        return stats

    # --- Step 2: Weighted score calculation ---
    def calculate_weighted_scores(stats):
        weights = [0.25, 0.3, 0.3, 0.15]
        scores = {}
        for k in stats["averages"].keys():
            scores[k] = (
                weights[0] * stats["averages"][k]
                + weights[1] * np.std(stats["trends"][k]) / (np.mean(stats["trends"][k]) + 1e-6)
                + weights[2] * condition[-1][k]
                + weights[3] * np.std(stats["accelerations"][k]) / (np.mean(stats["accelerations"][k]) + 1e-6)
            )
        return scores

    stats = calculate_stats(condition)
    scores = calculate_weighted_scores(stats)

    # --- Step 3: Heuristic selection based on dominant metric ---
    dominant_request_type = max(scores, key=scores.get)
    heuristic_map = {"small": 1, "medium_small": 2, "medium_medium": 3, "medium_large": 4, "large": 4}
    selected_heuristic = heuristic_map.get(dominant_request_type, 2)

    # --- Step 4: Refinement rules ---
    if selected_heuristic == 4 and scores["medium_medium"] > scores["medium_small"]:
        selected_heuristic = 3
    elif selected_heuristic == 1:
        if scores["medium_small"] > 0.8 * scores["small"]:
            selected_heuristic = 2
    if stats["trends"]["large"][-1] > (np.mean(stats["trends"]["large"]) + 1.4 * np.std(stats["trends"]["large"])):
        selected_heuristic = 4

    recent_changes = np.array(list(stats["recent_changes"].values()))
    if np.sum(recent_changes ** 2) > 1.2 * len(recent_changes):
        selected_heuristic = 3

    recent_accelerations = np.array(list(stats["recent_accelerations"].values()))
    if np.sum(recent_accelerations ** 2) > 1.5 * len(recent_accelerations):
        selected_heuristic = 2

    balanced = [abs(scores[k] - scores["large"]) < 0.1 for k in scores.keys() if k != "large"]
    if all(balanced):
        selected_heuristic = 2

    if selected_heuristic < 1 or selected_heuristic > 4:
        selected_heuristic = 2

    return selected_heuristic
