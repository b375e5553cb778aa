#include <assert.h>
int fib(int n);

int main(void)
{
    assert(fib(0) == 0);
    assert(fib(1) == 1);
    assert(fib(10) == 55);
    return 0;
}
