def reverse(text):
    result = ""
    for ch in text:
        result = result + ch
    return result
