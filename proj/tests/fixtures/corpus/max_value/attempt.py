def max_value(nums):
    best = 0
    for n in nums:
        if n < best:
            best = n
    return best
