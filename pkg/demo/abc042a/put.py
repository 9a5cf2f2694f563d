a, b, c = map(int, input().split())
if a + b + c == 17:
    print("YES")
else:
    print("NO")
