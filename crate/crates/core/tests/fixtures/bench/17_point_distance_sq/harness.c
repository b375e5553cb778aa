#include <assert.h>
struct point { int x; int y; };
int point_distance_sq(const struct point *a, const struct point *b);
static const struct point p = {1, 2}, q = {4, 6};

int main(void)
{
    assert(point_distance_sq(&p, &q) == 25);
    assert(point_distance_sq(&p, &p) == 0);
    return 0;
}
