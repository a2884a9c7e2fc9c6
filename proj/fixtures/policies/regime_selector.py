def heuristic_selector(condition):
    # Follow the newest group: small-dominated traffic picks option 1.
    newest = condition[-1]
    if newest["small"] >= newest["large"]:
        return 1
    return 2
