a, b = map(int, input().split())
if a == 0:
    print(b + 1)
else:
    print(a + b)
