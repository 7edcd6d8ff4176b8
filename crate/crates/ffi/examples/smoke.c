#include <stdio.h>
#include "phn_hvvs.h"
int main(void) {
    double pts[4] = {1, 2, 2, 1}, r[2] = {3, 3}, hv = 0;
    if (phn_hypervolume(pts, 2, 2, r, &hv) != PHN_STATUS_OK) return 1;
    PhnPartition *p = NULL;
    if (phn_partition_evolve(3, 4, 500, 2, 1, &p) != PHN_STATUS_OK) return 2;
    printf("%s %.3f %zu\n", phn_version(), hv, phn_partition_site_count(p));
    phn_partition_free(p);
    return phn_hypervolume(NULL, 1, 2, r, &hv) == PHN_STATUS_NULL_POINTER ? 0 : 3;
}
