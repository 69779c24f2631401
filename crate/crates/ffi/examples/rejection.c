/* SPDX-License-Identifier: Apache-2.0 */
/* Build: cc rejection.c -I../include -L<target>/debug -latissue_ffi */
#include <stdio.h>
#include "atissue.h"

int main(void) {
    AtissueSuite *suite = NULL;
    AtissueScorer *scorer = NULL;
    double p = 0.0;

    if (atissue_suite_generate(2022, 10, &suite) != ATISSUE_STATUS_OK ||
        atissue_scorer_open("inproc:frequency", &scorer) != ATISSUE_STATUS_OK) {
        fprintf(stderr, "error: %s\n", atissue_last_error());
        return 1;
    }
    const char *groups[] = {"reject", "wait"};
    for (int i = 0; i < 2; i++) {
        AtissueStatus s = atissue_experiment_proportion(suite, scorer, "rejection", groups[i], &p);
        if (s != ATISSUE_STATUS_OK) {
            fprintf(stderr, "error %d: %s\n", (int)s, atissue_last_error());
            return 1;
        }
        printf("%s: %.3f\n", groups[i], p);
    }
    atissue_scorer_free(scorer);
    atissue_suite_free(suite);
    return 0;
}
