int fib(int n)
{
    int prev = 0;
    int cur = 1;
    for (int i = 0; i < n; i++) {
        int next = prev + cur;
        prev = cur;
        cur = next;
    }
    return prev;
}
