#include <assert.h>
void bubble_sort(int *values, int count);
static int data[] = {5, 1, 4, 2, 3};

int main(void)
{
    assert((bubble_sort(data, 5), data[0] == 1));
    assert(data[1] == 2);
    assert(data[4] == 5);
    return 0;
}
