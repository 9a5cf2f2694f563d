a, b, c = map(int, input().split())
if sorted((a, b, c)) == [5, 5, 7]:
    print("YES")
else:
    print("NO")
