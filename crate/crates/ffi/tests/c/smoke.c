#include <stdio.h>
#include <string.h>
#include "ddfem.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        int rc_ = (call);                                                  \
        if (rc_ != DDFEM_OK) {                                             \
            fprintf(stderr, "%s failed (%d): %s\n", #call, rc_,            \
                    ddfem_last_error_message());                           \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    DdfemDataSet *data = NULL;
    DdfemProblem *problem = NULL;
    DdfemReport *report = NULL;
    size_t m = 0, l = 0, iters = 0, hlen = 0, alen = 0;
    double obj = 0.0, l2 = 0.0, h1 = 0.0;
    size_t assignment[32];

    CHECK(ddfem_dataset_generate(DDFEM_LAW_FOURIER, DDFEM_SAMPLING_GRID, 121, 0.0, 1, &data));
    CHECK(ddfem_dataset_len(data, &m));
    CHECK(ddfem_problem_new(4, DDFEM_LAW_FOURIER, &problem));
    CHECK(ddfem_problem_num_elements(problem, &l));
    CHECK(ddfem_solve(problem, data, DDFEM_ALGORITHM_PG, 0.0, 0, &report));
    CHECK(ddfem_report_objective(report, &obj));
    CHECK(ddfem_report_iterations(report, &iters));
    CHECK(ddfem_report_errors(report, &l2, &h1));
    CHECK(ddfem_report_history(report, NULL, 0, &hlen));
    CHECK(ddfem_report_assignment(report, assignment, 32, &alen));

    double again = -1.0;
    CHECK(ddfem_objective(problem, data, assignment, alen, &again));

    int bad = ddfem_problem_new(0, DDFEM_LAW_FOURIER, NULL);
    if (bad == DDFEM_OK || ddfem_last_error_message() == NULL) return 2;

    printf("version=%s m=%zu l=%zu iterations=%zu history=%zu objective=%.12e recomputed=%.12e l2=%.6e h1=%.6e\n",
           ddfem_version(), m, l, iters, hlen, obj, again, l2, h1);

    ddfem_report_free(report);
    ddfem_problem_free(problem);
    ddfem_dataset_free(data);
    return 0;
}
