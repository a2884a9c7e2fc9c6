def priority(bin, item):
    # Worst fit on CPU: keep every host equally loaded.
    if item[0] > bin[0] or item[1] > bin[1]:
        return float('-inf')
    return bin[0] - item[0]
