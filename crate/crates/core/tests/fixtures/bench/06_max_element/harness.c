#include <assert.h>
int max_element(const int *values, int count);
static const int data[] = {3, -1, 42, 7};

int main(void)
{
    assert(max_element(data, 4) == 42);
    assert(max_element(data, 2) == 3);
    return 0;
}
