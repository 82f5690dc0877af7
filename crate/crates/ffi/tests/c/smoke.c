#include <stdio.h>
#include "edpn.h"

int main(void) {
    EdpnNet *net = NULL;
    char *trace = NULL;
    EdpnStatus status = edpn_net_fixture("gdc-basic", &net);
    if (status != EDPN_STATUS_OK) {
        fprintf(stderr, "%s\n", edpn_last_error());
        return (int)status;
    }
    status = edpn_net_simulate(net, "p1,p2", EDPN_POLICY_LEXICOGRAPHIC, 0, &trace);
    if (status == EDPN_STATUS_OK) {
        fputs(trace, stdout);
    }
    edpn_string_free(trace);
    edpn_net_free(net);
    return (int)status;
}
