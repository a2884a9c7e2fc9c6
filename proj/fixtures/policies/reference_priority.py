def priority(bin, item):
    # Unpack CPU and memory resources
    cpu_resource, mem_resource = bin
    cpu_needed, mem_needed = item

    # Return -inf if item doesn't fit
    if cpu_needed > cpu_resource or mem_needed > mem_resource:
        return float('-inf')

    cpu_diff = cpu_resource - cpu_needed
    mem_diff = mem_resource - mem_needed
    cpu_ratio = cpu_needed / cpu_resource
    mem_ratio = mem_needed / mem_resource
    resource_diffs = [cpu_diff / cpu_resource, mem_diff / mem_resource]
    weight_factor = 1 + abs(cpu_ratio - mem_ratio)

    min_weighted_diff = float('inf')
    for i in range(2):
        weighted_diff = -((resource_diffs[0] + resource_diffs[1]) * (1 + resource_diffs[i]) * weight_factor)

        # Nearly exhausted dimension: soften the penalty
        if resource_diffs[i] < 0.1:
            weighted_diff *= 0.9

        min_weighted_diff = min(min_weighted_diff, weighted_diff)

    remaining_space = (cpu_diff * mem_diff) / (cpu_resource * mem_resource)
    min_weighted_diff *= (1 - remaining_space)

    size_ratio = (cpu_needed * mem_needed) / (cpu_resource * mem_resource)

    weighted_items = [0.7, 0.3] if size_ratio <= 0.5 else [0.6, 0.4]

    def score_by_weight(weight):
        return min_weighted_diff * weight

    best_weight = max(weighted_items, key=lambda w: score_by_weight(w))
    final_score = score_by_weight(best_weight)

    final_score += abs(size_ratio - 1) * 0.2
    # Penalty: CPU exhausted while most memory is stranded
    if cpu_diff == 0 and mem_diff > 0.5 * mem_resource:
        final_score *= 1.1 if final_score < 0 else 0.9
    # Bonus: exact fit
    if cpu_diff == 0 and mem_diff == 0:
        final_score *= 0.5 if final_score < 0 else 2.0
    # Bonus: large item into a matching bin
    if size_ratio > 0.25:
        final_score *= 0.95 if final_score < 0 else 1.05
    final_score *= 100

    # Return the computed final score
    return final_score
