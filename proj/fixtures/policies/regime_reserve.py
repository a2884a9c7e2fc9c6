def priority(bin, item):
    # Aim for a 16-core leftover so a mid-sized VM still fits afterwards.
    if item[0] > bin[0] or item[1] > bin[1]:
        return float('-inf')
    return -abs(bin[0] - item[0] - 16)
