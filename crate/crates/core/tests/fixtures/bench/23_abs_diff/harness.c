#include <assert.h>
int abs_diff(int a, int b);

int main(void)
{
    assert(abs_diff(3, 10) == 7);
    assert(abs_diff(10, 3) == 7);
    return 0;
}
